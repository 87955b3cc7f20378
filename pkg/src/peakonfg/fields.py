"""Periodic pseudo-spectral solver for the transport form of the momentum
equation,

    m_t + g(u, u_x) m_x = -(f + Dt g)(u, u_x) m + g_v(u, u_x) m^2,

with u recovered from m by inverting the Helmholtz operator 1 - d^2/dx^2 in
Fourier space.  Time stepping is classical 4-stage Runge-Kutta under the
advective CFL bound dt <= 0.5 h / max|g|; the top third of Fourier modes of
each right-hand-side evaluation is zeroed (2/3-rule dealiasing for the
polynomial nonlinearities).

The solver targets the classical (smooth) regime: peakon initial data is
mollified before a run, and integration stops when max|m| has grown by a
factor of 1e6 (numerical surrogate for wave breaking).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import expr
from .equations import FgEquation
from .wavebreak import blowup_AB, transport_coefficients

BLOWUP_GROWTH_FACTOR = 1e6


class CFLViolation(Exception):
    """Requested time step exceeds the advective CFL bound."""


class FieldBlowup(Exception):
    """max|m| grew past the breaking surrogate threshold."""


@dataclass(frozen=True)
class FieldState:
    L: float
    n: int
    m: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError("grid size must be a power of two, >= 16")
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float))
        if self.m.shape != (self.n,):
            raise ValueError("m must be a length-n grid array")
        if not np.all(np.isfinite(self.m)):
            raise ValueError("non-finite field values")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.h


def _kappa(L: float, n: int) -> np.ndarray:
    return 2.0 * np.pi / L * np.arange(n // 2 + 1)


def helmholtz_invert(fs: FieldState):
    """(u, u_x, u_xx) solving (1 - d^2/dx^2) u = m spectrally."""
    kap = _kappa(fs.L, fs.n)
    mhat = np.fft.rfft(fs.m)
    uhat = mhat / (1.0 + kap * kap)
    u = np.fft.irfft(uhat, n=fs.n)
    ux = np.fft.irfft(1j * kap * uhat, n=fs.n)
    uxx = np.fft.irfft(-(kap * kap) * uhat, n=fs.n)
    return u, ux, uxx


def spectral_dx(values: np.ndarray, L: float) -> np.ndarray:
    kap = _kappa(L, values.size)
    return np.fft.irfft(1j * kap * np.fft.rfft(values), n=values.size)


def _dealias(values: np.ndarray) -> np.ndarray:
    vhat = np.fft.rfft(values)
    cutoff = (values.size // 2 + 1) * 2 // 3
    vhat[cutoff:] = 0.0
    return np.fft.irfft(vhat, n=values.size)


class _Rhs:
    """Cached symbolic pieces of the transport form for one equation."""

    def __init__(self, eq: FgEquation):
        self.eq = eq
        velocity, reaction = transport_coefficients(eq)
        self.velocity = velocity
        self.reaction = reaction

    def velocity_values(self, u, ux):
        return np.broadcast_to(np.asarray(
            expr.evaluate(self.velocity, u, ux, 0.0), dtype=float), u.shape)

    def __call__(self, fs: FieldState, m: np.ndarray) -> np.ndarray:
        tmp = FieldState(fs.L, fs.n, m, fs.t)
        u, ux, _ = helmholtz_invert(tmp)
        g = self.velocity_values(u, ux)
        mx = spectral_dx(m, fs.L)
        react = np.asarray(expr.evaluate(self.reaction, u, ux, m), dtype=float)
        return _dealias(-g * mx + react)


def max_speed(eq: FgEquation, fs: FieldState) -> float:
    u, ux, _ = helmholtz_invert(fs)
    g = np.asarray(expr.evaluate(eq.g, u, ux, 0.0), dtype=float)
    return float(np.max(np.abs(g)))


def cfl_dt(eq: FgEquation, fs: FieldState) -> float:
    """Largest admissible step 0.5 h / max|g| (capped for quiescent fields)."""
    s = max_speed(eq, fs)
    if s == 0.0:
        return 0.5 * fs.h
    return 0.5 * fs.h / s


def step(eq: FgEquation, fs: FieldState, dt: float, _rhs: Optional[_Rhs] = None) -> FieldState:
    """One classical RK4 step; raises on CFL violation or non-finite output."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if dt > cfl_dt(eq, fs) * (1.0 + 1e-12):
        raise CFLViolation(
            f"dt = {dt:g} exceeds the advective bound {cfl_dt(eq, fs):g}")
    rhs = _rhs if _rhs is not None else _Rhs(eq)
    m = fs.m
    k1 = rhs(fs, m)
    k2 = rhs(fs, m + 0.5 * dt * k1)
    k3 = rhs(fs, m + 0.5 * dt * k2)
    k4 = rhs(fs, m + dt * k3)
    m_new = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(m_new)):
        raise FieldBlowup(f"non-finite field at t = {fs.t + dt:g}")
    return FieldState(fs.L, fs.n, m_new, fs.t + dt)


@dataclass
class FieldRun:
    states: list
    reason: str  # t_end | blowup

    @property
    def final(self) -> FieldState:
        return self.states[-1]


def run(eq: FgEquation, fs0: FieldState, t1: float, dt: Optional[float] = None,
        sample_every: int = 1, cfl_safety: float = 0.8) -> FieldRun:
    """March to t1, sampling every sample_every steps.

    dt defaults to cfl_safety * (initial CFL bound) and is refreshed whenever
    the CFL bound tightens.  The run stops early (reason 'blowup') when
    max|m| exceeds 1e6 times its initial value.
    """
    if t1 <= fs0.t:
        raise ValueError("t1 must exceed the initial time")
    rhs = _Rhs(eq)
    m0_max = max(float(np.max(np.abs(fs0.m))), 1e-300)
    states = [fs0]
    fs = fs0
    k = 0
    while fs.t < t1 - 1e-14 * max(1.0, abs(t1)):
        bound = cfl_dt(eq, fs)
        dt_k = dt if dt is not None else cfl_safety * bound
        dt_k = min(dt_k, bound, t1 - fs.t)
        try:
            fs = step(eq, fs, dt_k, _rhs=rhs)
        except FieldBlowup:
            return FieldRun(states, "blowup")
        k += 1
        if k % sample_every == 0 or fs.t >= t1 - 1e-14 * max(1.0, abs(t1)):
            states.append(fs)
        if float(np.max(np.abs(fs.m))) > BLOWUP_GROWTH_FACTOR * m0_max:
            states.append(fs) if states[-1] is not fs else None
            return FieldRun(states, "blowup")
    if states[-1] is not fs:
        states.append(fs)
    return FieldRun(states, "t_end")


# ------------------------------------------------------------ diagnostics

def m_h1_integral(fs: FieldState) -> float:
    """int (m^2 + m_x^2) dx on the periodic grid (trapezoid = exact mean)."""
    mx = spectral_dx(fs.m, fs.L)
    return float(np.sum(fs.m ** 2 + mx ** 2) * fs.h)


def h1_balance_residual(eq: FgEquation, states) -> float:
    """max_k |dI/dt + int(A m^2 + B m_x^2) dx| / (1 + I), centered dI/dt."""
    coeffs = blowup_AB(eq)
    I = np.array([m_h1_integral(fs) for fs in states])
    ts = np.array([fs.t for fs in states])
    worst = 0.0
    for k in range(1, len(states) - 1):
        fs = states[k]
        u, ux, _ = helmholtz_invert(fs)
        mx = spectral_dx(fs.m, fs.L)
        A = np.asarray(expr.evaluate(coeffs.A, u, ux, fs.m), dtype=float)
        B = np.asarray(expr.evaluate(coeffs.B, u, ux, fs.m), dtype=float)
        sink = float(np.sum(A * fs.m ** 2 + B * mx ** 2) * fs.h)
        dIdt = (I[k + 1] - I[k - 1]) / (ts[k + 1] - ts[k - 1])
        worst = max(worst, abs(dIdt + sink) / (1.0 + I[k]))
    return worst


def helmholtz_residual(fs: FieldState) -> float:
    """max |u - u_xx - m| of the spectral inversion (machine-level)."""
    u, _, uxx = helmholtz_invert(fs)
    return float(np.max(np.abs(u - uxx - fs.m)))


# --------------------------------------------------------- initial states

def state_from_u(L: float, n: int, u: np.ndarray, t: float = 0.0) -> FieldState:
    """FieldState with m = (1 - d^2/dx^2) u computed spectrally."""
    kap = _kappa(L, n)
    uhat = np.fft.rfft(np.asarray(u, dtype=float))
    m = np.fft.irfft((1.0 + kap * kap) * uhat, n=n)
    return FieldState(L, n, m, t)


def gaussian_state(L: float, n: int, amplitude: float = 1.0,
                   width: float = 1.0, center: Optional[float] = None) -> FieldState:
    """u = amplitude * exp(-((x - center)/width)^2) wrapped periodically."""
    if center is None:
        center = L / 2.0
    x = np.arange(n) * (L / n)
    u = np.zeros(n)
    for shift in (-L, 0.0, L):
        u += amplitude * np.exp(-(((x - center + shift) / width) ** 2))
    return state_from_u(L, n, u)


def mollified_peakon_state(L: float, n: int, alphas, betas,
                           width: Optional[float] = None) -> FieldState:
    """Peakon field with each momentum point mass 2 alpha_i delta(x - beta_i)
    replaced by a Gaussian of the same mass and the given width.

    Positions are taken relative to the domain center.  The default width is
    4 grid cells.  Mollifying m (rather than filtering u) keeps the peak
    amplitude and speed of the smoothed wave correct to O(width^2).
    """
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    h = L / n
    if width is None:
        width = 4.0 * h
    x = np.arange(n) * h
    m = np.zeros(n)
    norm = 1.0 / (width * math.sqrt(2.0 * math.pi))
    for a, b in zip(alphas, betas):
        for shift in (-L, 0.0, L):
            d = x - (L / 2.0 + b) + shift
            m += 2.0 * a * norm * np.exp(-0.5 * (d / width) ** 2)
    return FieldState(L, n, m)


def field_peaks(fs: FieldState, count: int = 2, floor: float = 0.15):
    """(position, height) of the `count` tallest local maxima of u, sorted by
    position.  Sub-grid refinement by quadratic interpolation; maxima below
    floor * max(u) are ignored."""
    u, _, _ = helmholtz_invert(fs)
    u_max = float(np.max(u))
    cands = []
    for k in range(fs.n):
        km, kp = (k - 1) % fs.n, (k + 1) % fs.n
        if u[k] > u[km] and u[k] >= u[kp] and u[k] > floor * u_max:
            denom = u[km] - 2.0 * u[k] + u[kp]
            offset = 0.5 * (u[km] - u[kp]) / denom if denom != 0.0 else 0.0
            height = u[k] - 0.25 * (u[km] - u[kp]) * offset
            cands.append(((k + offset) * fs.h, float(height)))
    cands.sort(key=lambda c: -c[1])
    return sorted(cands[:count])


def peak_position(fs: FieldState) -> float:
    """Location of the maximum of u, refined by quadratic interpolation."""
    u, _, _ = helmholtz_invert(fs)
    k = int(np.argmax(u))
    km, kp = (k - 1) % fs.n, (k + 1) % fs.n
    denom = u[km] - 2.0 * u[k] + u[kp]
    offset = 0.5 * (u[km] - u[kp]) / denom if denom != 0.0 else 0.0
    return (k + offset) * fs.h


def snapshot_rows(fs: FieldState):
    """(x, m, u, u_x) rows for CSV serialization."""
    u, ux, _ = helmholtz_invert(fs)
    for k in range(fs.n):
        yield (fs.x[k], fs.m[k], u[k], ux[k])
