"""N-peakon dynamics for fg-family equations.

A multi-peakon ansatz u = sum_i alpha_i(t) exp(-|x - beta_i(t)|) is a weak
solution iff the (alpha_i, beta_i) satisfy

    alphadot_i = (F(U_i, V_i - alpha_i) - F(U_i, V_i + alpha_i)) / 2
    betadot_i  = (G(U_i, V_i + alpha_i) - G(U_i, V_i - alpha_i)) / (2 alpha_i)

with U_i = sum_j alpha_j exp(-|beta_ij|), V_i = -sum_j sgn(beta_ij) alpha_j
exp(-|beta_ij|), beta_ij = beta_i - beta_j and sgn(0) = 0.  F, G are the
u_x-antiderivatives of f, g.  At alpha_i = 0 the betadot quotient has the
continuous limit dG/du_x(U_i, V_i) = g(U_i, V_i); such nodes are flagged
as degenerate.

Closed-form right-hand sides are provided for the generalized CH family
(f1 = s^(p-1), g1 = 0) and generalized mCH family (f1 = 0, g1 = s^p) via
binomial sums; they agree with the general quadrature route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .equations import FgEquation, antiderivative_F, antiderivative_G, gamma_coeff


@dataclass
class PeakonState:
    """Time plus N (amplitude, position) pairs."""

    t: float
    alphas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        self.alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        self.betas = np.atleast_1d(np.asarray(self.betas, dtype=float))
        if self.alphas.shape != self.betas.shape or self.alphas.ndim != 1:
            raise ValueError("alphas and betas must be 1-d arrays of equal length")
        if self.alphas.size < 1:
            raise ValueError("need at least one peakon")
        if not (np.all(np.isfinite(self.alphas)) and np.all(np.isfinite(self.betas))):
            raise ValueError("non-finite peakon state")

    @property
    def n(self) -> int:
        return self.alphas.size


@dataclass
class PeakonDerivative:
    alphadots: np.ndarray
    betadots: np.ndarray
    degenerate: tuple = ()  # indices where the zero-amplitude limit was used


@dataclass
class LocalData:
    U: np.ndarray  # u at the peaks
    V: np.ndarray  # non-singular part of u_x at the peaks


def local_data(state: PeakonState) -> LocalData:
    """U_i = u(beta_i), V_i = u_x(beta_i) with sgn(0) = 0."""
    d = state.betas[:, None] - state.betas[None, :]
    e = np.exp(-np.abs(d))
    U = e @ state.alphas
    V = -(np.sign(d) * e) @ state.alphas
    return LocalData(U=U, V=V)


def rhs_general(eq: FgEquation, state: PeakonState) -> PeakonDerivative:
    """Thm-form RHS via the antiderivatives F, G (analytic or quadrature)."""
    loc = local_data(state)
    n = state.n
    alphadots = np.empty(n)
    betadots = np.empty(n)
    degenerate = []
    for i in range(n):
        a = state.alphas[i]
        Ui = loc.U[i]
        Vi = loc.V[i]
        Fp = antiderivative_F(eq, Ui, Vi + a)
        Fm = antiderivative_F(eq, Ui, Vi - a)
        alphadots[i] = 0.5 * (Fm - Fp)
        if a == 0.0:
            degenerate.append(i)
            betadots[i] = eq.g_value(Ui, Vi)
        else:
            Gp = antiderivative_G(eq, Ui, Vi + a)
            Gm = antiderivative_G(eq, Ui, Vi - a)
            betadots[i] = 0.5 * (Gp - Gm) / a
    return PeakonDerivative(alphadots, betadots, tuple(degenerate))


def _hat_poly(U, w, p: int):
    """sum_j (-1)^j C(p,j)/(2j+1) U^(2(p-j)) w^(2j)  (= poly_int(U,w,p)/w)."""
    U2 = U * U
    w2 = w * w
    total = 0.0
    for j in range(p + 1):
        total += (-1) ** j * math.comb(p, j) / (2 * j + 1) * U2 ** (p - j) * w2 ** j
    return total


def rhs_gch(p: int, state: PeakonState) -> PeakonDerivative:
    """Closed-form RHS for the generalized CH family (f1 = s^(p-1))."""
    if p < 1:
        raise ValueError("p must be >= 1")
    loc = local_data(state)
    n = state.n
    alphadots = np.empty(n)
    betadots = np.empty(n)
    degenerate = []
    for i in range(n):
        a = state.alphas[i]
        U = loc.U[i]
        V = loc.V[i]
        Hp = (U * U - (V + a) ** 2) ** p
        Hm = (U * U - (V - a) ** 2) ** p
        alphadots[i] = (Hp - Hm) / (4 * p)
        if a == 0.0:
            degenerate.append(i)
            betadots[i] = U * (U * U - V * V) ** (p - 1)
        else:
            hp = _hat_poly(U, V + a, p - 1)
            hm = _hat_poly(U, V - a, p - 1)
            betadots[i] = U * ((V + a) * hp - (V - a) * hm) / (2 * a)
    return PeakonDerivative(alphadots, betadots, tuple(degenerate))


def rhs_gmch(p: int, state: PeakonState) -> PeakonDerivative:
    """Closed-form RHS for the generalized mCH family (g1 = s^p); alphadot = 0."""
    if p < 1:
        raise ValueError("p must be >= 1")
    loc = local_data(state)
    n = state.n
    betadots = np.empty(n)
    degenerate = []
    for i in range(n):
        a = state.alphas[i]
        U = loc.U[i]
        V = loc.V[i]
        if a == 0.0:
            degenerate.append(i)
            betadots[i] = (U * U - V * V) ** p
        else:
            hp = _hat_poly(U, V + a, p)
            hm = _hat_poly(U, V - a, p)
            betadots[i] = ((V + a) * hp - (V - a) * hm) / (2 * a)
    return PeakonDerivative(np.zeros(n), betadots, tuple(degenerate))


@dataclass
class SinglePeakonResult:
    is_travelling_wave: bool
    c: float
    condition_residual: float


def single_peakon_test(eq: FgEquation, a: float, tol: float = 1e-9) -> SinglePeakonResult:
    """Travelling-wave test: F(a,a) = F(a,-a) required; speed from G."""
    if a == 0.0:
        raise ValueError("amplitude must be nonzero")
    Fp = antiderivative_F(eq, a, a)
    Fm = antiderivative_F(eq, a, -a)
    residual = abs(Fp - Fm) / (1.0 + abs(Fp))
    c = (antiderivative_G(eq, a, a) - antiderivative_G(eq, a, -a)) / (2.0 * a)
    return SinglePeakonResult(residual <= tol, c, residual)


def speed_amplitude(eq: FgEquation, a: float) -> float:
    """Travelling-wave speed c(a) from the closed law when the preset has one."""
    if eq.speed_law is not None:
        return eq.speed_law(a)
    return single_peakon_test(eq, a).c


def field_eval(state: PeakonState, x):
    """Reconstruct (u, u_x) of the peakon field at x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    d = x[..., None] - state.betas
    e = np.exp(-np.abs(d)) * state.alphas
    u = e.sum(axis=-1)
    ux = -(np.sign(d) * e).sum(axis=-1)
    if x.ndim == 0:
        return float(u), float(ux)
    return u, ux


def field_time_derivative(state: PeakonState, deriv: PeakonDerivative, x):
    """u_t of the peakon field away from the peaks (non-singular form)."""
    x = np.asarray(x, dtype=float)
    d = x[..., None] - state.betas
    e = np.exp(-np.abs(d))
    ut = (deriv.alphadots * e).sum(axis=-1) + \
        (deriv.betadots * state.alphas * e * np.sign(d)).sum(axis=-1)
    if x.ndim == 0:
        return float(ut)
    return ut
