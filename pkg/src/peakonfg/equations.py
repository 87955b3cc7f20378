"""fg-family equations m_t + f(u, u_x) m + (g(u, u_x) m)_x = 0.

An FgEquation holds the pair (f, g) as expression trees (variable v stands
for u_x), optional analytic antiderivatives F, G in u_x with lower limit 0,
and, when the equation belongs to the CH-mCH Hamiltonian subfamily
f = u_x f1(s), g = u f1(s) + g1(s) with s = u^2 - u_x^2, the subfamily data.

Quadrature kernels:
    F(u, ux)   = int_0^ux f(u, y) dy           (antiderivative_F)
    G(u, ux)   = int_0^ux g(u, y) dy           (antiderivative_G)
    F1(s)      = int_0^s f1(y) dy
    G1tilde(s) = s^-1 int_0^s g1(y) dy         (lambda form near s = 0)
    F1hat      = int_0^ux f1(u^2 - y^2) dy     (G1hat analogous)
    c1(a)      = int_0^1 f1((1 - l^2) a^2) dl  (c0 analogous with g1)

Antiderivatives are defined only up to a function of u; every use takes
differences at fixed u, so the lower limit 0 is a free normalization.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from . import expr
from .expr import ExprNode, evaluate, parse, simplify, substitute

QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-10, limit=2000)

PRESET_NAMES = (
    "ch", "dp", "novikov", "mch", "b-family", "modified-b",
    "unified-chdpn", "unified-chdpnmch", "gch", "gmch",
    "unified-gch-gmch", "hamiltonian",
)


class QuadratureError(Exception):
    """Adaptive quadrature failed to converge at tolerance."""


def _quad(fn, a, b):
    if a == b:
        return 0.0
    val, err = quad(fn, a, b, **QUAD_OPTS)
    if not math.isfinite(val) or err > 1e-6 * (1.0 + abs(val)):
        raise QuadratureError(f"quadrature error estimate {err:g} for value {val:g}")
    return val


@dataclass(frozen=True)
class HamiltonianFamily:
    """Subfamily member (f1, g1), functions of s = u^2 - u_x^2.

    f1_expr / g1_expr are expression trees in the single variable u, which
    stands for s.  Optional analytic kernels short-circuit quadrature.
    """

    name: str
    f1_expr: ExprNode
    g1_expr: ExprNode
    F1: Optional[Callable[[float], float]] = None       # int_0^s f1
    G1int: Optional[Callable[[float], float]] = None    # int_0^s g1
    F1hat: Optional[Callable[[float, float], float]] = None  # int_0^ux f1(u^2-y^2)
    G1hat: Optional[Callable[[float, float], float]] = None

    def f1(self, s):
        return evaluate(self.f1_expr, s, 0.0, 0.0)

    def g1(self, s):
        return evaluate(self.g1_expr, s, 0.0, 0.0)


@dataclass(frozen=True)
class FgEquation:
    """One member of the fg-family."""

    name: str
    f: ExprNode
    g: ExprNode
    F: Optional[Callable] = None    # analytic int_0^ux f(u,y) dy
    G: Optional[Callable] = None
    Fu: Optional[Callable] = None   # partial of F in u
    Gu: Optional[Callable] = None
    hamiltonian: Optional[HamiltonianFamily] = None
    speed_law: Optional[Callable[[float], float]] = None
    f_fn: Optional[Callable] = None  # fast vectorized f(u, ux)
    g_fn: Optional[Callable] = None

    def f_value(self, u, ux):
        if self.f_fn is not None:
            return self.f_fn(u, ux)
        return evaluate(self.f, u, ux)

    def g_value(self, u, ux):
        if self.g_fn is not None:
            return self.g_fn(u, ux)
        return evaluate(self.g, u, ux)


# ------------------------------------------------------- quadrature kernels

def antiderivative_F(eq: FgEquation, u: float, ux: float) -> float:
    """F(u, ux) = int_0^ux f(u, y) dy."""
    if eq.F is not None:
        return eq.F(u, ux)
    return _quad(lambda y: eq.f_value(u, y), 0.0, ux)


def antiderivative_G(eq: FgEquation, u: float, ux: float) -> float:
    """G(u, ux) = int_0^ux g(u, y) dy."""
    if eq.G is not None:
        return eq.G(u, ux)
    return _quad(lambda y: eq.g_value(u, y), 0.0, ux)


@functools.lru_cache(maxsize=256)
def _partial_u(e: ExprNode) -> ExprNode:
    return expr.differentiate(e, "u")


def antiderivative_Fu(eq: FgEquation, u: float, ux: float) -> float:
    """dF/du by differentiating under the integral sign."""
    if eq.Fu is not None:
        return eq.Fu(u, ux)
    fu = _partial_u(eq.f)
    return _quad(lambda y: evaluate(fu, u, y), 0.0, ux)


def antiderivative_Gu(eq: FgEquation, u: float, ux: float) -> float:
    if eq.Gu is not None:
        return eq.Gu(u, ux)
    gu = _partial_u(eq.g)
    return _quad(lambda y: evaluate(gu, u, y), 0.0, ux)


def kernels_F1_G1tilde(h: HamiltonianFamily, s: float) -> tuple[float, float]:
    """(F1(s), G1tilde(s)); lambda form removes the 0/0 at s = 0."""
    if h.F1 is not None:
        F1 = h.F1(s)
    else:
        F1 = _quad(h.f1, 0.0, s)
    if abs(s) < 1e-8:
        G1t = _quad(lambda lam: h.g1(lam * s), 0.0, 1.0)
    elif h.G1int is not None:
        G1t = h.G1int(s) / s
    else:
        G1t = _quad(h.g1, 0.0, s) / s
    return F1, G1t


def kernels_hatF1_hatG1(h: HamiltonianFamily, u: float, ux: float) -> tuple[float, float]:
    """(F1hat, G1hat) = int_0^ux (f1, g1)(u^2 - y^2) dy."""
    if h.F1hat is not None:
        F1h = h.F1hat(u, ux)
    else:
        F1h = _quad(lambda y: h.f1(u * u - y * y), 0.0, ux)
    if h.G1hat is not None:
        G1h = h.G1hat(u, ux)
    else:
        G1h = _quad(lambda y: h.g1(u * u - y * y), 0.0, ux)
    return F1h, G1h


def speed_coefficients(h: HamiltonianFamily, a: float) -> tuple[float, float]:
    """(c1, c0) with single-peakon speed c = a*c1(a) + c0(a)."""
    a2 = a * a
    c1 = _quad(lambda lam: h.f1((1.0 - lam * lam) * a2), 0.0, 1.0)
    c0 = _quad(lambda lam: h.g1((1.0 - lam * lam) * a2), 0.0, 1.0)
    return c1, c0


def gamma_coeff(p: int) -> float:
    """gamma_p = (sqrt(pi)/2) Gamma(p)/Gamma(p+1/2) by exact recurrence."""
    if not isinstance(p, int) or p < 1:
        raise ValueError("p must be an integer >= 1")
    gamma = 1.0
    for k in range(1, p):
        gamma *= 2.0 * k / (2.0 * k + 1.0)
    return gamma


def hamiltonian_structure_residual(h: HamiltonianFamily, curve, xs, fd_step: float = 1e-4) -> float:
    """max |f(u,ux) m - d/dx (1/2) F1(u^2 - ux^2)| along a smooth curve.

    curve(x) must return (u, u_x, u_xx); the x-derivative is taken by central
    finite differences of the composite map.
    """
    def phi(x):
        u, ux, _ = curve(x)
        F1, _ = kernels_F1_G1tilde(h, u * u - ux * ux)
        return 0.5 * F1

    worst = 0.0
    eq_f = simplify(expr.BinOp("*", expr.V, substitute(h.f1_expr, {"u": parse("u^2-v^2")})))
    for x in np.atleast_1d(xs):
        u, ux, uxx = curve(float(x))
        lhs = evaluate(eq_f, u, ux) * (u - uxx)
        rhs = (phi(float(x) + fd_step) - phi(float(x) - fd_step)) / (2.0 * fd_step)
        worst = max(worst, abs(lhs - rhs))
    return worst


# ------------------------------------------------------------- closed forms

def poly_int(u, w, p: int):
    """int_0^w (u^2 - y^2)^p dy for integer p >= 0 (binomial closed form)."""
    if p < 0:
        raise ValueError("p must be >= 0")
    u2 = u * u
    w2 = w * w
    total = 0.0
    for j in range(p + 1):
        total = total + ((-1) ** j) * math.comb(p, j) / (2 * j + 1) * u2 ** (p - j) * w2 ** j
    return total * w


def _speed_from_gamma(p: int, power: int):
    gam = gamma_coeff(p) if power % 2 == 1 else gamma_coeff(p + 1)
    return gam


# ------------------------------------------------------------------ presets

def _ham_power(name: str, fp: Optional[int], gp: Optional[int]) -> HamiltonianFamily:
    """Hamiltonian family with power-law kernels f1 = s^fp, g1 = s^gp."""
    f1e = parse(f"u^{fp}") if fp is not None else expr.ZERO
    g1e = parse(f"u^{gp}") if gp is not None else expr.ZERO
    F1 = (lambda s, _p=fp: s ** (_p + 1) / (_p + 1)) if fp is not None else (lambda s: 0.0)
    G1i = (lambda s, _p=gp: s ** (_p + 1) / (_p + 1)) if gp is not None else (lambda s: 0.0)
    F1h = (lambda u, ux, _p=fp: poly_int(u, ux, _p)) if fp is not None else (lambda u, ux: 0.0)
    G1h = (lambda u, ux, _p=gp: poly_int(u, ux, _p)) if gp is not None else (lambda u, ux: 0.0)
    return HamiltonianFamily(name, f1e, g1e, F1=F1, G1int=G1i, F1hat=F1h, G1hat=G1h)


def _gch_equation(p: int, name: str) -> FgEquation:
    if not isinstance(p, int) or p < 1:
        raise ValueError("gch requires integer p >= 1")
    ham = _ham_power(name, p - 1, None)
    if p == 1:
        f, g = parse("v"), parse("u")
    else:
        f = simplify(parse(f"v*(u^2-v^2)^{p - 1}"))
        g = simplify(parse(f"u*(u^2-v^2)^{p - 1}"))

    def F(u, ux, _p=p):
        s = u * u - ux * ux
        return (u ** (2 * _p) - s ** _p) / (2 * _p)

    def Fu(u, ux, _p=p):
        s = u * u - ux * ux
        return u ** (2 * _p - 1) - u * s ** (_p - 1)

    def G(u, ux, _p=p):
        return u * poly_int(u, ux, _p - 1)

    def Gu(u, ux, _p=p):
        base = poly_int(u, ux, _p - 1)
        if _p >= 2:
            base = base + 2.0 * (_p - 1) * u * u * poly_int(u, ux, _p - 2)
        return base

    gam = gamma_coeff(p)
    return FgEquation(
        name=name, f=f, g=g, F=F, G=G, Fu=Fu, Gu=Gu, hamiltonian=ham,
        speed_law=lambda a, _g=gam, _p=p: _g * a ** (2 * _p - 1),
        f_fn=lambda u, ux, _p=p: ux * (u * u - ux * ux) ** (_p - 1),
        g_fn=lambda u, ux, _p=p: u * (u * u - ux * ux) ** (_p - 1),
    )


def _gmch_equation(p: int, name: str) -> FgEquation:
    if not isinstance(p, int) or p < 1:
        raise ValueError("gmch requires integer p >= 1")
    ham = _ham_power(name, None, p)
    g = simplify(parse(f"(u^2-v^2)^{p}")) if p > 1 else parse("u^2-v^2")
    gam = gamma_coeff(p + 1)
    return FgEquation(
        name=name, f=expr.ZERO, g=g,
        F=lambda u, ux: 0.0, Fu=lambda u, ux: 0.0,
        G=lambda u, ux, _p=p: poly_int(u, ux, _p),
        Gu=lambda u, ux, _p=p: 2.0 * _p * u * poly_int(u, ux, _p - 1),
        hamiltonian=ham,
        speed_law=lambda a, _g=gam, _p=p: _g * a ** (2 * _p),
        f_fn=lambda u, ux: np.zeros_like(np.asarray(u, dtype=float)) if not np.isscalar(u) else 0.0,
        g_fn=lambda u, ux, _p=p: (u * u - ux * ux) ** _p,
    )


def hamiltonian_to_fg(h: HamiltonianFamily, name: Optional[str] = None) -> FgEquation:
    """Build f = u_x f1(s), g = u f1(s) + g1(s), s = u^2 - u_x^2."""
    s_expr = parse("u^2-v^2")
    f1s = substitute(h.f1_expr, {"u": s_expr})
    g1s = substitute(h.g1_expr, {"u": s_expr})
    f = simplify(expr.BinOp("*", expr.V, f1s))
    g = simplify(expr.BinOp("+", expr.BinOp("*", expr.U, f1s), g1s))

    def speed(a, _h=h):
        c1, c0 = speed_coefficients(_h, a)
        return a * c1 + c0

    return FgEquation(name=name or f"hamiltonian({h.name})", f=f, g=g,
                      hamiltonian=h, speed_law=speed)


def hamiltonian_family_from_text(f1_text: str, g1_text: str, name: str = "custom") -> HamiltonianFamily:
    """Parse f1, g1 from DSL text in the single variable u (standing for s)."""
    trees = []
    for label, text in (("f1", f1_text), ("g1", g1_text)):
        tree = parse(text)
        if _uses_var(tree, "v") or _uses_var(tree, "m"):
            raise ValueError(f"{label} must be a function of u (= s) only")
        trees.append(tree)
    return HamiltonianFamily(name, trees[0], trees[1])


def _uses_var(e: ExprNode, name: str) -> bool:
    if isinstance(e, expr.Var):
        return e.name == name
    if isinstance(e, expr.Neg):
        return _uses_var(e.arg, name)
    if isinstance(e, expr.BinOp):
        return _uses_var(e.left, name) or _uses_var(e.right, name)
    if isinstance(e, expr.Pow):
        return _uses_var(e.base, name)
    if isinstance(e, expr.Call):
        return _uses_var(e.arg, name)
    return False


def _require_int(value, label):
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"{label} must be an integer")
    return value


def preset(name: str, **params) -> FgEquation:
    """Named fg-family members; exact strings match the CLI config."""
    name = name.lower()
    if name == "ch":
        eq = _gch_equation(1, "ch")
        return eq
    if name == "dp":
        return FgEquation(
            name="dp", f=parse("2*v"), g=parse("u"),
            F=lambda u, ux: ux * ux, Fu=lambda u, ux: 0.0,
            G=lambda u, ux: u * ux, Gu=lambda u, ux: ux,
            speed_law=lambda a: a,
            f_fn=lambda u, ux: 2.0 * ux, g_fn=lambda u, ux: u,
        )
    if name == "novikov":
        return FgEquation(
            name="novikov", f=parse("u*v"), g=parse("u^2"),
            F=lambda u, ux: 0.5 * u * ux * ux, Fu=lambda u, ux: 0.5 * ux * ux,
            G=lambda u, ux: u * u * ux, Gu=lambda u, ux: 2.0 * u * ux,
            speed_law=lambda a: a * a,
            f_fn=lambda u, ux: u * ux, g_fn=lambda u, ux: u * u,
        )
    if name == "mch":
        return _gmch_equation(1, "mch")
    if name == "b-family":
        b = params.get("b")
        if b is None or b == 0:
            raise ValueError("b-family requires parameter b != 0")
        f = simplify(substitute(parse("m*v"), {"m": _const_node(b - 1)}))
        return FgEquation(
            name=f"b-family(b={b})", f=f, g=parse("u"),
            F=lambda u, ux, _b=b: 0.5 * (_b - 1) * ux * ux, Fu=lambda u, ux: 0.0,
            G=lambda u, ux: u * ux, Gu=lambda u, ux: ux,
            speed_law=lambda a: a,
            f_fn=lambda u, ux, _b=b: (_b - 1) * ux, g_fn=lambda u, ux: u,
        )
    if name == "modified-b":
        b = params.get("b")
        if b is None or b == 0:
            raise ValueError("modified-b requires parameter b != 0")
        f = simplify(substitute(parse("m*u*v"), {"m": _const_node(b - 2)}))
        return FgEquation(
            name=f"modified-b(b={b})", f=f, g=parse("u^2"),
            F=lambda u, ux, _b=b: 0.5 * (_b - 2) * u * ux * ux,
            Fu=lambda u, ux, _b=b: 0.5 * (_b - 2) * ux * ux,
            G=lambda u, ux: u * u * ux, Gu=lambda u, ux: 2.0 * u * ux,
            speed_law=lambda a: a * a,
            f_fn=lambda u, ux, _b=b: (_b - 2) * u * ux, g_fn=lambda u, ux: u * u,
        )
    if name == "unified-chdpn":
        b = params.get("b")
        p = _require_int(params.get("p"), "p")
        if b is None or b == 0 or p < 1:
            raise ValueError("unified-chdpn requires b != 0 and integer p >= 1")
        f = simplify(substitute(parse(f"m*u^{p - 1}*v"), {"m": _const_node(b - p)}))
        return FgEquation(
            name=f"unified-chdpn(b={b},p={p})", f=f, g=parse(f"u^{p}"),
            F=lambda u, ux, _b=b, _p=p: 0.5 * (_b - _p) * u ** (_p - 1) * ux * ux,
            G=lambda u, ux, _p=p: u ** _p * ux,
            speed_law=lambda a, _p=p: a ** _p,
            f_fn=lambda u, ux, _b=b, _p=p: (_b - _p) * u ** (_p - 1) * ux,
            g_fn=lambda u, ux, _p=p: u ** _p,
        )
    if name == "unified-chdpnmch":
        a = params.get("a")
        b = params.get("b")
        p = _require_int(params.get("p"), "p")
        if a is None or b is None or p < 1:
            raise ValueError("unified-chdpnmch requires parameters a, b and integer p >= 1")
        # build f, g with numeric parameters substituted symbolically
        c1 = _const_node(b - p)
        c2 = _const_node(3 * a * (p - 2))
        f = simplify(expr.BinOp("*", parse(f"u^{p - 3}*v"),
                                expr.BinOp("+",
                                           expr.BinOp("*", c1, parse("u^2")),
                                           expr.BinOp("*", c2, parse("v^2")))))
        g = simplify(expr.BinOp("*", parse(f"u^{p - 2}"),
                                expr.BinOp("-", parse("u^2"),
                                           expr.BinOp("*", _const_node(3 * a), parse("v^2")))))
        return FgEquation(
            name=f"unified-chdpnmch(a={a},b={b},p={p})", f=f, g=g,
            F=lambda u, ux, _a=a, _b=b, _p=p:
                0.5 * (_b - _p) * u ** (_p - 1) * ux ** 2 + 0.75 * _a * (_p - 2) * u ** (_p - 3) * ux ** 4,
            G=lambda u, ux, _a=a, _p=p: u ** _p * ux - _a * u ** (_p - 2) * ux ** 3,
        )
    if name == "gch":
        p = _require_int(params.get("p"), "p")
        return _gch_equation(p, f"gch(p={p})")
    if name == "gmch":
        p = _require_int(params.get("p"), "p")
        return _gmch_equation(p, f"gmch(p={p})")
    if name == "unified-gch-gmch":
        k = _require_int(params.get("k"), "k")
        if k < 0:
            raise ValueError("unified-gch-gmch requires integer k >= 0")
        # f1 = (1-k) s^(k/2), g1 = k s^((k+1)/2); odd powers via sqrt
        f1e = simplify(expr.BinOp("*", _const_node(1 - k), _half_power(k)))
        g1e = simplify(expr.BinOp("*", _const_node(k), _half_power(k + 1)))
        ham = HamiltonianFamily(f"unified-gch-gmch(k={k})", f1e, g1e)
        eq = hamiltonian_to_fg(ham, name=f"unified-gch-gmch(k={k})")
        return eq
    if name == "hamiltonian":
        h = params.get("family")
        if h is None:
            f1 = params.get("f1")
            g1 = params.get("g1")
            if f1 is None or g1 is None:
                raise ValueError("hamiltonian preset requires family or f1/g1 texts")
            h = hamiltonian_family_from_text(f1, g1)
        return hamiltonian_to_fg(h, name="hamiltonian")
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def _half_power(k: int) -> ExprNode:
    """s^(k/2) in the variable u (standing for s), via sqrt for odd k."""
    if k % 2 == 0:
        return parse(f"u^{k // 2}") if k else expr.ONE
    return parse(f"sqrt(u)^{k}")


def _const_node(x) -> ExprNode:
    if isinstance(x, int):
        return expr.Const(x) if x >= 0 else expr.Neg(expr.Const(-x))
    xf = float(x)
    if xf.is_integer():
        n = int(xf)
        return expr.Const(n) if n >= 0 else expr.Neg(expr.Const(-n))
    return expr.Const(xf) if xf >= 0 else expr.Neg(expr.Const(-xf))
