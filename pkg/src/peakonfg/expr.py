"""Tiny expression language for scalar functions of u, v (= u_x) and m.

Expressions are immutable trees built either programmatically or by parsing
text in a deliberately small grammar:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | 'u' | 'v' | 'm' | func '(' expr ')' | '(' expr ')' | '-' base

with func in {exp, ln, sqrt, abs, sign, sin, cos, tanh, atanh}.  Whitespace is
insignificant.  Exponents are integers only, so powers stay single-valued at
negative bases.

Supported operations: evaluation (scalar or numpy array inputs), exact
symbolic differentiation in u or v (abs/sign are refused), substitution, and
light simplification (constant folding, 0/1 identities, like-term collection
over flattened sums).  Constants are kept as int/Fraction where possible so
rational coefficients survive simplification and render as e.g. (2/3)*v*m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DomainError(ExprError):
    """Evaluation left the domain (div by zero, ln of non-positive, ...)."""


class NonDifferentiableError(ExprError):
    """Raised when differentiating through abs or sign."""


VARIABLES = ("u", "v", "m")
FUNCTIONS = ("exp", "ln", "sqrt", "abs", "sign", "sin", "cos", "tanh", "atanh")

_NUMPY_FUNCS = {
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sign": np.sign,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "atanh": np.arctanh,
}

# rendering precedence levels
_PREC_SUM = 1
_PREC_PROD = 2
_PREC_UNARY = 3
_PREC_POW = 4
_PREC_ATOM = 5


class ExprNode:
    """Base node; subclasses are frozen dataclasses."""

    __slots__ = ()

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({render(self)!r})"


@dataclass(frozen=True, repr=False)
class Const(ExprNode):
    value: object  # int | Fraction | float

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float, Fraction)):
            raise TypeError(f"bad constant payload {self.value!r}")


@dataclass(frozen=True, repr=False)
class Var(ExprNode):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")


@dataclass(frozen=True, repr=False)
class Neg(ExprNode):
    arg: ExprNode


@dataclass(frozen=True, repr=False)
class BinOp(ExprNode):
    op: str  # '+', '-', '*', '/'
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True, repr=False)
class Pow(ExprNode):
    base: ExprNode
    exponent: int


@dataclass(frozen=True, repr=False)
class Call(ExprNode):
    func: str
    arg: ExprNode

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


ZERO = Const(0)
ONE = Const(1)
U = Var("u")
V = Var("v")
M = Var("m")


# ----------------------------------------------------------------- parsing

class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take_number(self):
        """Consume a decimal number with optional exponent; int when integral."""
        self._skip_ws()
        start = self.pos
        text = self.text
        n = len(text)
        i = self.pos
        while i < n and text[i].isdigit():
            i += 1
        is_float = False
        if i < n and text[i] == ".":
            is_float = True
            i += 1
            while i < n and text[i].isdigit():
                i += 1
        if i < n and text[i] in "eE":
            j = i + 1
            if j < n and text[j] in "+-":
                j += 1
            if j < n and text[j].isdigit():
                is_float = True
                i = j
                while i < n and text[i].isdigit():
                    i += 1
        if i == start:
            raise ParseError("expected number", start)
        self.pos = i
        literal = text[start:i]
        return float(literal) if is_float else int(literal)

    def take_ident(self) -> str:
        self._skip_ws()
        start = self.pos
        text = self.text
        while self.pos < len(text) and (text[self.pos].isalpha() or text[self.pos] == "_"):
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected identifier", start)
        return text[start:self.pos]

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.pos)
        self.pos += 1


def parse(text: str) -> ExprNode:
    """Parse text into an expression tree."""
    tok = _Tokenizer(text)
    node = _parse_expr(tok)
    if tok.peek():
        raise ParseError(f"unexpected {tok.peek()!r}", tok.pos)
    return node


def _parse_expr(tok: _Tokenizer) -> ExprNode:
    node = _parse_term(tok)
    while tok.peek() and tok.peek() in "+-":
        op = tok.peek()
        tok.pos += 1
        node = BinOp(op, node, _parse_term(tok))
    return node


def _parse_term(tok: _Tokenizer) -> ExprNode:
    node = _parse_factor(tok)
    while tok.peek() and tok.peek() in "*/":
        op = tok.peek()
        tok.pos += 1
        node = BinOp(op, node, _parse_factor(tok))
    return node


def _parse_factor(tok: _Tokenizer) -> ExprNode:
    node = _parse_base(tok)
    if tok.peek() == "^":
        tok.pos += 1
        sign = 1
        if tok.peek() == "-":
            sign = -1
            tok.pos += 1
        pos = tok.pos
        exponent = tok.take_number()
        if not isinstance(exponent, int):
            raise ParseError("exponent must be an integer", pos)
        node = Pow(node, sign * exponent)
    return node


def _parse_base(tok: _Tokenizer) -> ExprNode:
    ch = tok.peek()
    if ch == "":
        raise ParseError("unexpected end of input", tok.pos)
    if ch == "-":
        tok.pos += 1
        return Neg(_parse_base(tok))
    if ch == "(":
        tok.pos += 1
        node = _parse_expr(tok)
        tok.expect(")")
        return node
    if ch.isdigit() or ch == ".":
        return Const(tok.take_number())
    if ch.isalpha():
        pos = tok.pos
        ident = tok.take_ident()
        if ident in VARIABLES:
            return Var(ident)
        if ident in FUNCTIONS:
            tok.expect("(")
            arg = _parse_expr(tok)
            tok.expect(")")
            return Call(ident, arg)
        raise ParseError(f"unknown identifier {ident!r}", pos)
    raise ParseError(f"unexpected character {ch!r}", tok.pos)


# -------------------------------------------------------------- evaluation

def evaluate(e: ExprNode, u, v, m=0.0):
    """Evaluate at scalar or array (u, v, m); raises DomainError off-domain."""
    scalar = np.isscalar(u) and np.isscalar(v) and np.isscalar(m)
    env = {"u": u, "v": v, "m": m}
    with np.errstate(all="ignore"):
        out = _eval(e, env)
    if not np.all(np.isfinite(out)):
        raise DomainError(f"non-finite value evaluating {render(e)}")
    return float(out) if scalar else np.asarray(out, dtype=float)


def _eval(e: ExprNode, env):
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return np.divide(a, b)
    if isinstance(e, Pow):
        base = _eval(e.base, env)
        # repeated multiplication keeps integer powers exact at negative bases
        n = e.exponent
        if n == 0:
            return np.ones_like(np.asarray(base, dtype=float)) if not np.isscalar(base) else 1.0
        inv = n < 0
        n = abs(n)
        out = base
        for _ in range(n - 1):
            out = out * base
        return np.divide(1.0, out) if inv else out
    if isinstance(e, Call):
        arg = _eval(e.arg, env)
        if e.func == "ln":
            arg = np.where(np.asarray(arg) > 0, arg, np.nan) if not np.isscalar(arg) else (arg if arg > 0 else np.nan)
        return _NUMPY_FUNCS[e.func](arg)
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------- differentiation

def differentiate(e: ExprNode, var: str) -> ExprNode:
    """Exact symbolic derivative with respect to 'u' or 'v' (simplified)."""
    if var not in ("u", "v"):
        raise ValueError("differentiation variable must be 'u' or 'v'")
    return simplify(_diff(e, var))


def _diff(e: ExprNode, var: str) -> ExprNode:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, var))
    if isinstance(e, BinOp):
        da = _diff(e.left, var)
        db = _diff(e.right, var)
        if e.op in "+-":
            return BinOp(e.op, da, db)
        if e.op == "*":
            return BinOp("+", BinOp("*", da, e.right), BinOp("*", e.left, db))
        # quotient rule
        num = BinOp("-", BinOp("*", da, e.right), BinOp("*", e.left, db))
        return BinOp("/", num, Pow(e.right, 2))
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            return ZERO
        db = _diff(e.base, var)
        return BinOp("*", BinOp("*", Const(n), Pow(e.base, n - 1)), db)
    if isinstance(e, Call):
        if e.func in ("abs", "sign"):
            raise NonDifferentiableError(f"cannot differentiate {e.func}()")
        darg = _diff(e.arg, var)
        a = e.arg
        if e.func == "exp":
            outer = Call("exp", a)
        elif e.func == "ln":
            outer = BinOp("/", ONE, a)
        elif e.func == "sqrt":
            outer = BinOp("/", ONE, BinOp("*", Const(2), Call("sqrt", a)))
        elif e.func == "sin":
            outer = Call("cos", a)
        elif e.func == "cos":
            outer = Neg(Call("sin", a))
        elif e.func == "tanh":
            outer = BinOp("-", ONE, Pow(Call("tanh", a), 2))
        else:  # atanh
            outer = BinOp("/", ONE, BinOp("-", ONE, Pow(a, 2)))
        return BinOp("*", outer, darg)
    raise TypeError(f"unknown node {e!r}")


def contains_nonsmooth(e: ExprNode) -> bool:
    """True if the tree contains abs() or sign()."""
    if isinstance(e, Call):
        return e.func in ("abs", "sign") or contains_nonsmooth(e.arg)
    if isinstance(e, Neg):
        return contains_nonsmooth(e.arg)
    if isinstance(e, BinOp):
        return contains_nonsmooth(e.left) or contains_nonsmooth(e.right)
    if isinstance(e, Pow):
        return contains_nonsmooth(e.base)
    return False


# ------------------------------------------------------------ substitution

def substitute(e: ExprNode, mapping: dict) -> ExprNode:
    """Replace variables by expressions, e.g. {'u': parse('u^2-v^2')}."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    raise TypeError(f"unknown node {e!r}")


# ----------------------------------------------------------- simplification

def _exact(x):
    """Normalize an exact constant: Fraction -> int when integral."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def _const_value(e):
    return e.value if isinstance(e, Const) else None


def simplify(e: ExprNode) -> ExprNode:
    """Constant folding, 0/1 identities, like-term collection in sums.

    Evaluation-equivalent to the input wherever both are defined.
    """
    e = _simplify_node(e)
    return e


def _simplify_node(e: ExprNode) -> ExprNode:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        a = _simplify_node(e.arg)
        if isinstance(a, Const):
            return Const(_exact(-_as_exact(a.value)))
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Pow):
        base = _simplify_node(e.base)
        if e.exponent == 0:
            return ONE
        if e.exponent == 1:
            return base
        if isinstance(base, Const):
            val = _as_exact(base.value)
            if e.exponent >= 0 or val != 0:
                if isinstance(val, float):
                    return Const(val ** e.exponent)
                out = Fraction(val) ** e.exponent
                return Const(_exact(out))
        return Pow(base, e.exponent)
    if isinstance(e, Call):
        return Call(e.func, _simplify_node(e.arg))
    if isinstance(e, BinOp):
        a = _simplify_node(e.left)
        b = _simplify_node(e.right)
        if e.op in "+-":
            return _simplify_sum(BinOp(e.op, a, b))
        if e.op == "*":
            return _simplify_product(a, b)
        return _simplify_quotient(a, b)
    raise TypeError(f"unknown node {e!r}")


def _as_exact(x):
    """int/Fraction pass through; floats stay floats."""
    return x


def _mul_const(x, y):
    if isinstance(x, float) or isinstance(y, float):
        return float(x) * float(y)
    return _exact(Fraction(x) * Fraction(y))


def _add_const(x, y):
    if isinstance(x, float) or isinstance(y, float):
        return float(x) + float(y)
    return _exact(Fraction(x) + Fraction(y))


def _div_const(x, y):
    if isinstance(x, float) or isinstance(y, float):
        if float(y) == 0.0:
            return None
        return float(x) / float(y)
    if y == 0:
        return None
    return _exact(Fraction(x) / Fraction(y))


def _split_coefficient(e: ExprNode):
    """Split a (simplified) term into (numeric coefficient, sorted factor list)."""
    coeff = 1
    factors = []
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Neg):
            coeff = _mul_const(coeff, -1)
            stack.append(node.arg)
        elif isinstance(node, BinOp) and node.op == "*":
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Const):
            coeff = _mul_const(coeff, node.value)
        else:
            factors.append(node)
    factors.sort(key=_factor_key)
    return coeff, factors


def _factor_key(e: ExprNode):
    # keep plain variables in u, v, m order ahead of composite factors
    if isinstance(e, Var):
        return (0, VARIABLES.index(e.name), "")
    if isinstance(e, Pow) and isinstance(e.base, Var):
        return (0, VARIABLES.index(e.base.name), "")
    return (1, 0, render(e))


def _product_of(factors):
    if not factors:
        return ONE
    out = factors[0]
    for fac in factors[1:]:
        out = BinOp("*", out, fac)
    return out


def _term_with_coeff(coeff, factors):
    body = _product_of(factors)
    if coeff == 1:
        return body, False
    if coeff == -1:
        return body, True
    negative = (coeff < 0) if not isinstance(coeff, float) else coeff < 0
    mag = -coeff if negative else coeff
    if not factors:
        return Const(mag), negative
    return BinOp("*", Const(mag), body), negative


def _simplify_sum(e: ExprNode) -> ExprNode:
    # flatten +/- chains into signed terms
    terms = []

    def walk(node, sign):
        if isinstance(node, BinOp) and node.op in "+-":
            walk(node.left, sign)
            walk(node.right, sign if node.op == "+" else -sign)
        elif isinstance(node, Neg):
            walk(node.arg, -sign)
        else:
            terms.append((sign, node))

    walk(e, 1)
    grouped = {}
    order = []
    const_acc = 0
    for sign, term in terms:
        coeff, factors = _split_coefficient(term)
        if sign < 0:
            coeff = _mul_const(coeff, -1)
        if not factors:
            const_acc = _add_const(const_acc, coeff)
            continue
        key = "*".join(render(f) for f in factors)
        if key in grouped:
            grouped[key] = (_add_const(grouped[key][0], coeff), factors)
        else:
            grouped[key] = (coeff, factors)
            order.append(key)
    pieces = []
    for key in order:
        coeff, factors = grouped[key]
        if coeff == 0 and not isinstance(coeff, float):
            continue
        if isinstance(coeff, float) and coeff == 0.0:
            continue
        pieces.append(_term_with_coeff(coeff, factors))
    if const_acc != 0 or not pieces:
        if not pieces and const_acc == 0:
            return ZERO
        negative = const_acc < 0
        pieces.append((Const(-const_acc if negative else const_acc), negative))
    out = None
    for body, negative in pieces:
        if out is None:
            out = Neg(body) if negative else body
        else:
            out = BinOp("-" if negative else "+", out, body)
    return out


def _simplify_product(a: ExprNode, b: ExprNode) -> ExprNode:
    coeff_a, fac_a = _split_coefficient(a)
    coeff_b, fac_b = _split_coefficient(b)
    coeff = _mul_const(coeff_a, coeff_b)
    if coeff == 0 and not isinstance(coeff, float):
        return ZERO
    factors = sorted(fac_a + fac_b, key=_factor_key)
    body, negative = _term_with_coeff(coeff, factors)
    return Neg(body) if negative else body


def _simplify_quotient(a: ExprNode, b: ExprNode) -> ExprNode:
    va, vb = _const_value(a), _const_value(b)
    if vb is not None:
        folded = None
        if va is not None:
            folded = _div_const(va, vb)
        if folded is not None:
            if isinstance(folded, float) or folded >= 0:
                return Const(folded)
            return Neg(Const(-folded))
        if vb == 1:
            return a
    if va == 0 and not isinstance(va, float):
        # 0/x -> 0 wherever x != 0 (equivalent where both sides are defined)
        return ZERO
    return BinOp("/", a, b)


# ---------------------------------------------------------------- rendering

def _render_const(value) -> tuple[str, int]:
    if isinstance(value, Fraction):
        return f"({value.numerator}/{value.denominator})", _PREC_ATOM
    if isinstance(value, int):
        return (str(value), _PREC_ATOM) if value >= 0 else (str(value), _PREC_UNARY)
    if value >= 0:
        return repr(value), _PREC_ATOM
    return repr(value), _PREC_UNARY


def _render(e: ExprNode) -> tuple[str, int]:
    if isinstance(e, Const):
        return _render_const(e.value)
    if isinstance(e, Var):
        return e.name, _PREC_ATOM
    if isinstance(e, Neg):
        text, prec = _render(e.arg)
        if prec < _PREC_UNARY:
            text = f"({text})"
        return f"-{text}", _PREC_UNARY
    if isinstance(e, Pow):
        text, prec = _render(e.base)
        if prec < _PREC_ATOM:
            text = f"({text})"
        return f"{text}^{e.exponent}", _PREC_POW
    if isinstance(e, Call):
        text, _ = _render(e.arg)
        return f"{e.func}({text})", _PREC_ATOM
    if isinstance(e, BinOp):
        lt, lp = _render(e.left)
        rt, rp = _render(e.right)
        if e.op in "+-":
            if lp < _PREC_SUM:
                lt = f"({lt})"
            if rp <= _PREC_SUM:
                rt = f"({rt})"
            return f"{lt} {e.op} {rt}", _PREC_SUM
        if lp < _PREC_PROD:
            lt = f"({lt})"
        if rp < _PREC_PROD or (e.op == "/" and rp == _PREC_PROD):
            rt = f"({rt})"
        return f"{lt}{e.op}{rt}", _PREC_PROD
    raise TypeError(f"unknown node {e!r}")


def render(e: ExprNode) -> str:
    """Render to text that parses back to an evaluation-equivalent tree."""
    return _render(e)[0]
