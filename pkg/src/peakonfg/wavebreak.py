"""Blow-up coefficients for smooth (f, g) pairs.

The momentum equation m_t + f m + (g m)_x = 0 can be written in transport
form m_t + g m_x = -(f + Dt g) m + g_v m^2, where Dt = v d/du + u d/dv acts
on functions of (u, v) = (u, u_x).  Along smooth solutions the H1 norm of m
obeys

    d/dt int (m^2 + m_x^2) dx = -int (A m^2 + B m_x^2) dx

with coefficients polynomial in m,

    A = A0 + A1 m + A2 m^2 + A3 m^3,    B = B0 + B1 m,

    A0 = 2f - Dt^2 f + Dt(g - Dt^2 g)
    A1 = f_u + (5/3) Dt f_v + (8/3) Dt g_u + (7/3) Dt^2 g_v
    A2 = -(2/3) f_vv - 2 g_uv - (11/6) Dt g_vv
    A3 = (1/2) g_vvv
    B0 = 2f + 3 Dt g
    B1 = -5 g_v

A time series of inf_x(alpha A + beta B) trending to -infinity signals
finite-time wave breaking.  All constructions are symbolic on the expression
DSL; equations whose f or g contain abs/sign are rejected (the identity
assumes smooth coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import expr
from .expr import BinOp, Const, ExprNode, M, Neg, U, V
from .equations import FgEquation


class NonSmoothEquationError(Exception):
    """f or g contains abs/sign; the blow-up identity needs smooth (f, g)."""


def _smooth_or_raise(eq: FgEquation) -> None:
    for name, e in (("f", eq.f), ("g", eq.g)):
        if expr.contains_nonsmooth(e):
            raise NonSmoothEquationError(
                f"{name} of equation {eq.name!r} contains abs or sign; "
                "blow-up coefficients are defined for smooth (f, g) only")


def tilde_D(e: ExprNode) -> ExprNode:
    """Dt e = v de/du + u de/dv."""
    du = expr.differentiate(e, "u")
    dv = expr.differentiate(e, "v")
    return expr.simplify(BinOp("+", BinOp("*", V, du), BinOp("*", U, dv)))


def _frac(p: int, q: int = 1) -> ExprNode:
    f = Fraction(p, q)
    if f < 0:
        return Neg(Const(-f))
    return Const(f)


def _mul(*es: ExprNode) -> ExprNode:
    out = es[0]
    for e in es[1:]:
        out = BinOp("*", out, e)
    return out


def _add(*es: ExprNode) -> ExprNode:
    out = es[0]
    for e in es[1:]:
        out = BinOp("+", out, e)
    return out


@dataclass(frozen=True)
class BlowupCoefficients:
    A0: ExprNode
    A1: ExprNode
    A2: ExprNode
    A3: ExprNode
    B0: ExprNode
    B1: ExprNode
    A: ExprNode
    B: ExprNode

    def render(self) -> dict:
        return {name: expr.render(getattr(self, name))
                for name in ("A0", "A1", "A2", "A3", "B0", "B1", "A", "B")}


def blowup_AB(eq: FgEquation) -> BlowupCoefficients:
    """Symbolic A, B (and their m-polynomial components) for smooth (f, g)."""
    _smooth_or_raise(eq)
    f, g = eq.f, eq.g
    d = expr.differentiate
    s = expr.simplify

    f_u = d(f, "u")
    f_v = d(f, "v")
    f_vv = d(f_v, "v")
    g_u = d(g, "u")
    g_v = d(g, "v")
    g_uv = d(g_u, "v")
    g_vv = d(g_v, "v")
    g_vvv = d(g_vv, "v")

    A0 = s(_add(_mul(Const(2), f), Neg(tilde_D(tilde_D(f))),
               tilde_D(BinOp("-", g, tilde_D(tilde_D(g))))))
    A1 = s(_add(f_u,
                _mul(_frac(5, 3), tilde_D(f_v)),
                _mul(_frac(8, 3), tilde_D(g_u)),
                _mul(_frac(7, 3), tilde_D(tilde_D(g_v)))))
    A2 = s(_add(_mul(_frac(-2, 3), f_vv),
                _mul(_frac(-2, 1), g_uv),
                _mul(_frac(-11, 6), tilde_D(g_vv))))
    A3 = s(_mul(_frac(1, 2), g_vvv))
    B0 = s(_add(_mul(Const(2), f), _mul(Const(3), tilde_D(g))))
    B1 = s(_mul(_frac(-5, 1), g_v))

    A = s(_add(A0, _mul(A1, M), _mul(A2, M, M), _mul(A3, M, M, M)))
    B = s(_add(B0, _mul(B1, M)))
    return BlowupCoefficients(A0=A0, A1=A1, A2=A2, A3=A3, B0=B0, B1=B1, A=A, B=B)


def transport_coefficients(eq: FgEquation):
    """(velocity, reaction) with m_t + velocity * m_x = reaction."""
    _smooth_or_raise(eq)
    g_v = expr.differentiate(eq.g, "v")
    velocity = expr.simplify(eq.g)
    reaction = expr.simplify(
        _add(Neg(_mul(BinOp("+", eq.f, tilde_D(eq.g)), M)),
             _mul(g_v, M, M)))
    return velocity, reaction


def proof_decomposition(eq: FgEquation):
    """(Atilde, Btilde) with Atilde = 2f + Dt g - g_v m and
    Btilde = 2f + 3 Dt g - 3 g_v m; B = Btilde - 2 g_v m."""
    _smooth_or_raise(eq)
    g_v = expr.differentiate(eq.g, "v")
    two_f = _mul(Const(2), eq.f)
    Atilde = expr.simplify(_add(two_f, tilde_D(eq.g), Neg(_mul(g_v, M))))
    Btilde = expr.simplify(_add(two_f, _mul(Const(3), tilde_D(eq.g)),
                                Neg(_mul(Const(3), g_v, M))))
    return Atilde, Btilde


def blowup_indicator(coeffs: BlowupCoefficients, u, ux, m,
                     alpha: float = 1.0, beta: float = 1.0) -> float:
    """inf over the samples of alpha*A + beta*B."""
    if alpha < 0 or beta < 0:
        raise ValueError("weights must be nonnegative")
    if alpha == 0 and beta == 0:
        raise ValueError("weights must not both be zero")
    u = np.asarray(u, dtype=float)
    ux = np.asarray(ux, dtype=float)
    m = np.asarray(m, dtype=float)
    total = np.zeros(np.broadcast(u, ux, m).shape)
    if alpha != 0.0:
        total = total + alpha * expr.evaluate(coeffs.A, u, ux, m)
    if beta != 0.0:
        total = total + beta * expr.evaluate(coeffs.B, u, ux, m)
    return float(np.min(total))
