"""Adaptive integration of peakon ODE systems with event detection.

The state vector is (alpha_1..N, beta_1..N).  Integration uses an embedded
Runge-Kutta 5(4) pair (Dormand-Prince, via scipy's RK45) with dense output.
Events:

    collision : beta_i - beta_j crosses zero (or pair separation reaches
                the configured minimum separation), terminal
    blowup    : max |alpha_i| reaches the amplitude cap, terminal
    turning   : betadot_i - betadot_j crosses zero, recorded only

Collisions terminate the run by default; with continue_through_collisions
the integration restarts just past the event (the RHS is continuous there
for the families treated here, but no fidelity claim is made for N > 2
multi-collisions).  Custom scalar events may be supplied as
(name, fn(t, state) -> value, terminal) triples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import PeakonDerivative, PeakonState


class NonFiniteDerivative(Exception):
    """RHS produced a non-finite value."""


class EventLocationError(Exception):
    """Event function does not change sign over the bracket."""


@dataclass(frozen=True)
class IntegrationConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = math.inf
    stride: Optional[float] = None      # output sample spacing; None -> span/200
    amplitude_cap: float = 1e8
    min_separation: float = 0.0         # eps_coll; 0 -> detect zero crossing
    events: tuple = ("collision", "blowup")
    continue_through_collisions: bool = False
    custom_events: tuple = ()           # (name, fn(t, PeakonState) -> float, terminal)
    max_restarts: int = 200

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.amplitude_cap <= 0:
            raise ValueError("amplitude cap must be positive")
        if self.min_separation < 0:
            raise ValueError("minimum separation must be >= 0")


@dataclass
class EventRecord:
    kind: str
    time: float
    pair: Optional[tuple] = None


@dataclass
class Trajectory:
    """Sampled solution with dense interpolants kept for re-evaluation."""

    ts: np.ndarray
    states: list
    events: list
    reason: str                 # t_end | collision | blowup | step-underflow | event:<name>
    rhs: Callable
    t0: float
    t1: float
    _segments: list = field(default_factory=list)  # (t_lo, t_hi, OdeSolution)

    @property
    def final(self) -> PeakonState:
        return self.states[-1]

    def state_at(self, t: float) -> PeakonState:
        for t_lo, t_hi, sol in self._segments:
            if t_lo - 1e-12 <= t <= t_hi + 1e-12:
                y = sol(min(max(t, t_lo), t_hi))
                n = y.size // 2
                return PeakonState(t, y[:n], y[n:])
        raise ValueError(f"time {t} outside trajectory range [{self.t0}, {self.ts[-1]}]")

    def derivative_at(self, t: float) -> PeakonDerivative:
        return self.rhs(self.state_at(t))


def _pack(state: PeakonState) -> np.ndarray:
    return np.concatenate([state.alphas, state.betas])


def _unpack(t: float, y: np.ndarray) -> PeakonState:
    n = y.size // 2
    return PeakonState(t, y[:n], y[n:])


def integrate(rhs: Callable, s0: PeakonState, t1: float,
              cfg: IntegrationConfig = IntegrationConfig()) -> Trajectory:
    """Integrate d(state)/dt = rhs(state) from s0.t to t1."""
    n = s0.n
    t0 = float(s0.t)
    if t1 == t0:
        raise ValueError("empty time span")
    forward = t1 > t0

    def fun(t, y):
        d = rhs(_unpack(t, y))
        out = np.concatenate([d.alphadots, d.betadots])
        if not np.all(np.isfinite(out)):
            raise NonFiniteDerivative(f"non-finite derivative at t={t}")
        return out

    event_fns = []
    event_meta = []  # (kind, pair, terminal)

    if "collision" in cfg.events and n >= 2:
        for i, j in combinations(range(n), 2):
            if cfg.min_separation > 0.0:
                def sep_ev(t, y, i=i, j=j):
                    return abs(y[n + i] - y[n + j]) - cfg.min_separation
                sep_ev.terminal = True
                sep_ev.direction = -1
                event_fns.append(sep_ev)
            else:
                def cross_ev(t, y, i=i, j=j):
                    return y[n + i] - y[n + j]
                cross_ev.terminal = True
                cross_ev.direction = 0
                event_fns.append(cross_ev)
            event_meta.append(("collision", (i, j), True))

    if "blowup" in cfg.events:
        def blow_ev(t, y):
            return np.max(np.abs(y[:n])) - cfg.amplitude_cap
        blow_ev.terminal = True
        blow_ev.direction = 1
        event_fns.append(blow_ev)
        event_meta.append(("blowup", None, True))

    if "turning" in cfg.events and n >= 2:
        for i, j in combinations(range(n), 2):
            def turn_ev(t, y, i=i, j=j):
                d = rhs(_unpack(t, y))
                return d.betadots[i] - d.betadots[j]
            turn_ev.terminal = False
            turn_ev.direction = 0
            event_fns.append(turn_ev)
            event_meta.append(("turning", (i, j), False))

    for name, fn, terminal in cfg.custom_events:
        def cust_ev(t, y, fn=fn):
            return fn(t, _unpack(t, y))
        cust_ev.terminal = bool(terminal)
        cust_ev.direction = 0
        event_fns.append(cust_ev)
        event_meta.append((f"event:{name}", None, bool(terminal)))

    span = abs(t1 - t0)
    stride = cfg.stride if cfg.stride is not None else span / 200.0

    ts_out = [t0]
    states_out = [PeakonState(t0, s0.alphas.copy(), s0.betas.copy())]
    events_out = []
    segments = []
    reason = "t_end"

    t_cur = t0
    y_cur = _pack(s0)
    restarts = 0
    while True:
        sol = solve_ivp(fun, (t_cur, t1), y_cur, method="RK45",
                        rtol=cfg.rtol, atol=cfg.atol, max_step=cfg.max_step,
                        dense_output=True, events=event_fns or None)
        if sol.sol is not None:
            seg_lo, seg_hi = sorted((t_cur, sol.t[-1]))
            segments.append((seg_lo, seg_hi, sol.sol))

        # record non-terminal (and terminal) events that fired
        terminal_kind = None
        terminal_pair = None
        terminal_t = None
        if event_fns:
            for k, t_events in enumerate(sol.t_events):
                kind, pair, terminal = event_meta[k]
                for te in np.atleast_1d(t_events):
                    events_out.append(EventRecord(kind, float(te), pair))
                    if terminal and sol.status == 1:
                        if terminal_t is None or abs(te - sol.t[-1]) < abs(terminal_t - sol.t[-1]):
                            if abs(te - sol.t[-1]) <= 1e-9 * (1 + abs(sol.t[-1])):
                                terminal_kind, terminal_pair, terminal_t = kind, pair, float(te)
        events_out.sort(key=lambda ev: ev.time if forward else -ev.time)

        # sample this segment on the stride grid
        t_end_seg = sol.t[-1]
        direction = 1.0 if forward else -1.0
        k0 = math.floor((t_cur - t0) / (stride * direction)) + 1 if stride > 0 else 0
        t_samples = []
        if stride > 0:
            tk = t0 + k0 * stride * direction
            while (tk - t_end_seg) * direction < -1e-14 * max(1.0, abs(t_end_seg)):
                if (tk - t_cur) * direction > 1e-14 * max(1.0, abs(tk)):
                    t_samples.append(tk)
                tk += stride * direction
        for tk in t_samples:
            ts_out.append(tk)
            states_out.append(_unpack(tk, sol.sol(tk)))
        if abs(t_end_seg - ts_out[-1]) > 0:
            ts_out.append(t_end_seg)
            states_out.append(_unpack(t_end_seg, sol.y[:, -1]))

        if sol.status == 0:
            reason = "t_end"
            break
        if sol.status == -1:
            reason = "step-underflow"
            break
        # terminal event
        if terminal_kind == "collision" and cfg.continue_through_collisions:
            restarts += 1
            if restarts > cfg.max_restarts:
                reason = "collision"
                break
            # nudge past the event with a tiny Euler step to avoid retriggering;
            # the vector field is ambiguous exactly at a collision (sgn(0) = 0),
            # so take the step direction from just before the event
            delta = direction * max(1e-9, 1e-12 * span)
            y_ev = sol.y[:, -1]
            y_pre = sol.sol(t_end_seg - delta) if sol.sol is not None else y_ev
            y_cur = y_ev + delta * fun(t_end_seg - delta, y_pre)
            t_cur = t_end_seg + delta
            if (t1 - t_cur) * direction <= 0:
                reason = "t_end"
                break
            continue
        reason = terminal_kind if terminal_kind is not None else "t_end"
        break

    return Trajectory(ts=np.asarray(ts_out), states=states_out, events=events_out,
                      reason=reason, rhs=rhs, t0=t0, t1=t1, _segments=segments)


def locate_event(dense: Callable, event_fn: Callable, t_lo: float, t_hi: float,
                 tol: float = 1e-10) -> float:
    """Root of event_fn(t, dense(t)) in [t_lo, t_hi] by bisection/secant.

    dense maps time to a state vector (any object event_fn accepts).
    """
    f_lo = event_fn(t_lo, dense(t_lo))
    f_hi = event_fn(t_hi, dense(t_hi))
    if f_lo == 0.0:
        return t_lo
    if f_hi == 0.0:
        return t_hi
    if f_lo * f_hi > 0:
        raise EventLocationError("event function does not change sign over the bracket")
    while abs(t_hi - t_lo) > tol:
        # secant proposal, safeguarded by bisection
        denom = f_hi - f_lo
        t_mid = 0.5 * (t_lo + t_hi)
        if denom != 0.0:
            t_sec = t_hi - f_hi * (t_hi - t_lo) / denom
            lo, hi = sorted((t_lo, t_hi))
            if lo + 0.1 * (hi - lo) < t_sec < hi - 0.1 * (hi - lo):
                t_mid = t_sec
        f_mid = event_fn(t_mid, dense(t_mid))
        if f_mid == 0.0:
            return t_mid
        if f_lo * f_mid < 0:
            t_hi, f_hi = t_mid, f_mid
        else:
            t_lo, f_lo = t_mid, f_mid
    return 0.5 * (t_lo + t_hi)
