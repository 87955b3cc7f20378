"""Closed-form regime taxonomy for 2-peakon solutions.

Covered reductions (beta12 = beta_1 - beta_2, alpha12 = alpha_1 - alpha_2,
M = alpha_1 + alpha_2, B = exp(-|beta12|)):

    CH          mu = 2E/M^2 - 1 with E = (alpha12^2 (1-B) + M^2 B)/2;
                mu < 0 elastic bounce with minimum separation -ln(1+mu),
                mu > 0 peakon-antipeakon collision with |alpha12| -> inf.
    gCH  p=2    nu = 9 M^4 C with the first integral
                C = (3M^2+a^2+3(M^2-a^2)B)/(3M^2+a^2+(M^2-a^2)B)^3, a = alpha12;
                five regimes on nu in (-inf, 1) split at 0, 27/32 (and the
                collision-sign boundary 9/16).
    gmCH p=1    betadot12 = gamma = (2/3)(alpha_1^2 - alpha_2^2), linear.
    gmCH p=2    betadot12 = gamma (1 + sigma exp(-|beta12|)) with
                gamma = (8/15)(alpha_1^4 - alpha_2^4),
                sigma = 5 alpha_1 alpha_2 / (alpha_1^2 + alpha_2^2);
                sigma <= -1 produces bound pairs with turning at ln|sigma|.

Cubic landmark roots are found by bracketed bisection on the admissible
interval, never by closed-form cubic formulas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


NU_BOUNCE_MIN = 27.0 / 32.0
NU_SIGN_BOUNDARY = 9.0 / 16.0


@dataclass
class RegimeReport:
    model: str
    regime: str
    invariants: dict
    landmarks: dict

    def to_json_dict(self) -> dict:
        return {"model": self.model, "regime": self.regime,
                "invariants": dict(self.invariants), "landmarks": dict(self.landmarks)}

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def _bisect(fn, lo: float, hi: float, tol: float = 1e-15, maxit: int = 200) -> float:
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise ValueError("root not bracketed")
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0.0 or hi - lo < tol:
            return mid
        if f_lo * f_mid < 0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


# -------------------------------------------------------------------- CH

def classify_ch(M: float, E: float) -> RegimeReport:
    """Regime of the CH 2-peakon from total amplitude M and energy E."""
    if M == 0.0:
        return RegimeReport("ch", "unclassified", {"M": M, "E": E, "mu": math.nan}, {})
    mu = 2.0 * E / (M * M) - 1.0
    inv = {"M": M, "E": E, "mu": mu}
    # asymptotic (B -> 0) relative amplitude alpha12^2 -> 2E; CH peakons move
    # at speed equal to amplitude, so the outgoing speeds are (M +- sqrt(2E))/2
    if E >= 0.0:
        r = math.sqrt(2.0 * E)
        asym = {"asymptotic_amplitudes": ((M + r) / 2.0, (M - r) / 2.0),
                "asymptotic_separation_rate": r}
    else:
        asym = {}
    if mu > 0.0:
        lm = {"collision": True, "relative_amplitude_blowup": True}
        lm.update(asym)
        return RegimeReport("ch", "collision", inv, lm)
    if mu < 0.0:
        if mu <= -1.0:
            return RegimeReport("ch", "unclassified", inv, {})
        lm = {"collision": False, "min_separation": -math.log(1.0 + mu)}
        lm.update(asym)
        return RegimeReport("ch", "bounce", inv, lm)
    lm = {"collision": False, "min_separation": 0.0}
    lm.update(asym)
    return RegimeReport("ch", "trivial", inv, lm)


def ch_separation_rate(M: float, E: float, beta12: float) -> float:
    """|betadot12| = sqrt(1 - B) sqrt(2E - M^2 B), B = exp(-|beta12|)."""
    B = math.exp(-abs(beta12))
    r1 = 1.0 - B
    r2 = 2.0 * E - M * M * B
    if r2 < 0.0:
        raise ValueError("state not reachable: 2E - M^2 exp(-|beta12|) < 0")
    return math.sqrt(r1) * math.sqrt(r2)


def ch_state_from_mu(mu: float, M: float = 1.0, beta12: float = 4.0):
    """(alpha1, alpha2, beta1, beta2) of a CH 2-peakon with prescribed mu.

    Solves alpha12^2 = (2E - M^2 B)/(1 - B) at separation beta12 for
    E = (1 + mu) M^2 / 2.
    """
    if M == 0.0:
        raise ValueError("M must be nonzero")
    B = math.exp(-abs(beta12))
    if B >= 1.0:
        raise ValueError("beta12 must be nonzero")
    E = 0.5 * (1.0 + mu) * M * M
    a_sq = (2.0 * E - M * M * B) / (1.0 - B)
    if a_sq < 0.0:
        raise ValueError("separation exceeds the turning point for this mu")
    a12 = math.sqrt(a_sq)
    return ((M + a12) / 2.0, (M - a12) / 2.0, abs(beta12) / 2.0, -abs(beta12) / 2.0)


# ------------------------------------------------------------- gCH p = 2

def gch_p2_invariant(M: float, alpha12: float, beta12: float) -> float:
    """nu = 9 M^4 C from the first integral C(alpha12, beta12)."""
    B = math.exp(-abs(beta12))
    a2 = alpha12 * alpha12
    num = 3.0 * M * M + a2 + 3.0 * (M * M - a2) * B
    den = 3.0 * M * M + a2 + (M * M - a2) * B
    if den == 0.0:
        raise ValueError("degenerate state: first-integral denominator vanishes")
    return 9.0 * M ** 4 * num / den ** 3


def gch_p2_rates(M: float, alpha12: float, beta12: float):
    """(alphadot12, betadot12) of the p = 2 gCH 2-peakon reduction."""
    B = math.exp(-abs(beta12))
    a2 = alpha12 * alpha12
    adot = 0.25 * _sgn(beta12) * (M * M - a2) ** 2 * B * B
    bdot = (alpha12 / 6.0) * (3.0 * M * M + a2
                              + (M * M - a2) * (4.0 - 3.0 * B) * B)
    return adot, bdot


def _sgn(x: float) -> float:
    return math.copysign(1.0, x) if x != 0.0 else 0.0


def gch_p2_bounce_cubic(nu: float) -> float:
    """Root B in (0, 1] of nu (B+3)^3 = 27 (B+1)  (turning with alpha12 = 0)."""
    if not (NU_BOUNCE_MIN <= nu < 1.0):
        raise ValueError("bounce turning point requires 27/32 <= nu < 1")
    fn = lambda B: nu * (B + 3.0) ** 3 - 27.0 * (B + 1.0)
    return _bisect(fn, 1e-300, 1.0)


def gch_p2_negative_turning_cubic(nu: float) -> float:
    """Root B in (1/3, 1) of 48 nu B^2 (1-B) = (1-3B)^3  (nu < 0 turning)."""
    if nu >= 0.0:
        raise ValueError("this turning branch requires nu < 0")
    fn = lambda B: 48.0 * nu * B * B * (1.0 - B) - (1.0 - 3.0 * B) ** 3
    return _bisect(fn, 1.0 / 3.0 + 1e-15, 1.0 - 1e-15)


def gch_p2_turning_amplitude_sq(B: float) -> float:
    """(alpha12/M)^2 = (3B^2 - 4B - 3)/((1-B)(1-3B)) on 1/3 < B < 1."""
    return (3.0 * B * B - 4.0 * B - 3.0) / ((1.0 - B) * (1.0 - 3.0 * B))


def classify_gch_p2(nu: float) -> RegimeReport:
    """Regime of the p = 2 gCH 2-peakon from the constant of motion nu.

    Landmarks are scale free: relative amplitudes are reported as
    (alpha12 / M)^2.
    """
    if nu >= 1.0:
        raise ValueError("nu must satisfy nu < 1")
    inv = {"nu": nu}
    if nu > NU_BOUNCE_MIN:
        B = gch_p2_bounce_cubic(nu)
        return RegimeReport("gch-p2", "bounce", inv,
                            {"collision": False,
                             "turning_separation": -math.log(B),
                             "turning_relative_amplitude_sq": 0.0})
    if nu == NU_BOUNCE_MIN:
        return RegimeReport("gch-p2", "bounce-at-collision", inv,
                            {"collision": True,
                             "turning_separation": 0.0,
                             "collision_relative_amplitude_sq": 0.0})
    coll_sq = (27.0 - 32.0 * nu) / 9.0
    if nu > 0.0:
        kind = ("two-peakon" if nu > NU_SIGN_BOUNDARY
                else "peakon-antipeakon" if nu < NU_SIGN_BOUNDARY
                else "sign-boundary")
        return RegimeReport("gch-p2", "collision", inv,
                            {"collision": True,
                             "collision_type": kind,
                             "collision_relative_amplitude_sq": coll_sq,
                             "asymptotic_relative_amplitude_sq":
                                 3.0 * (math.sqrt(1.0 / nu) - 1.0)})
    if nu == 0.0:
        return RegimeReport("gch-p2", "blowup", inv,
                            {"collision": True,
                             "collision_relative_amplitude_sq": coll_sq,
                             "blowup_separation_limit": math.log(3.0)})
    B = gch_p2_negative_turning_cubic(nu)
    return RegimeReport("gch-p2", "collision-turning-blowup", inv,
                        {"collision": True,
                         "collision_relative_amplitude_sq": coll_sq,
                         "turning_separation": -math.log(B),
                         "turning_relative_amplitude_sq": gch_p2_turning_amplitude_sq(B),
                         "blowup_separation_limit": 0.0})


def gch_p2_state_from_nu(nu: float, M: float = 1.0, beta12: float = 1.0,
                         branch: str = "small"):
    """(alpha1, alpha2, beta1, beta2) with prescribed nu at separation beta12.

    The first integral is a cubic in alpha12^2; roots are located by scanning
    and bisection.  branch selects the smallest ('small') or largest ('large')
    admissible nonnegative root.
    """
    if M == 0.0:
        raise ValueError("M must be nonzero")
    B = math.exp(-abs(beta12))

    def fn(a2):
        num = 3.0 * M * M + a2 + 3.0 * (M * M - a2) * B
        den = 3.0 * M * M + a2 + (M * M - a2) * B
        return nu * den ** 3 - 9.0 * M ** 4 * num

    roots = []
    grid = [M * M * 10.0 ** k * s for k in range(-8, 9)
            for s in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)]
    grid = sorted(set([0.0] + grid))
    for lo, hi in zip(grid[:-1], grid[1:]):
        try:
            if fn(lo) * fn(hi) < 0:
                roots.append(_bisect(fn, lo, hi))
            elif fn(lo) == 0.0:
                roots.append(lo)
        except (OverflowError, ValueError):
            continue
    if not roots:
        raise ValueError("no 2-peakon state with this nu at this separation")
    a2 = min(roots) if branch == "small" else max(roots)
    a12 = math.sqrt(a2)
    return ((M + a12) / 2.0, (M - a12) / 2.0, abs(beta12) / 2.0, -abs(beta12) / 2.0)


# ------------------------------------------------------------------ gmCH

def gmch_invariants(p: int, alpha1: float, alpha2: float) -> dict:
    if p == 1:
        return {"gamma": (2.0 / 3.0) * (alpha1 ** 2 - alpha2 ** 2)}
    if p == 2:
        denom = alpha1 * alpha1 + alpha2 * alpha2
        sigma = 5.0 * alpha1 * alpha2 / denom if denom != 0.0 else math.nan
        return {"gamma": (8.0 / 15.0) * (alpha1 ** 4 - alpha2 ** 4), "sigma": sigma}
    raise ValueError("p must be 1 or 2")


def classify_gmch(p: int, alpha1: float, alpha2: float, beta12_0: float) -> RegimeReport:
    """Regime of the p = 1 or p = 2 gmCH 2-peakon (amplitudes are frozen)."""
    inv = gmch_invariants(p, alpha1, alpha2)
    gamma = inv["gamma"]
    if p == 1:
        if gamma == 0.0:
            return RegimeReport("gmch-p1", "constant-separation", inv,
                                {"collision": False, "separation": abs(beta12_0)})
        lm = {"collision": True,
              "collision_time": -beta12_0 / gamma,
              "asymptotic_speeds": ((2.0 / 3.0) * alpha1 ** 2,
                                    (2.0 / 3.0) * alpha2 ** 2)}
        return RegimeReport("gmch-p1", "collision", inv, lm)
    sigma = inv["sigma"]
    if gamma == 0.0:
        return RegimeReport("gmch-p2", "constant-separation", inv,
                            {"collision": False, "separation": abs(beta12_0)})
    speeds = {"asymptotic_speeds": ((8.0 / 15.0) * alpha1 ** 4,
                                    (8.0 / 15.0) * alpha2 ** 4)}
    if sigma > -1.0:
        lm = {"collision": True}
        lm.update(speeds)
        return RegimeReport("gmch-p2", "collision", inv, lm)
    b_star = math.log(abs(sigma))
    if abs(beta12_0) < b_star:
        # bound pair: separation -> ln|sigma| in one time direction,
        # collapse through a collision in the other
        return RegimeReport("gmch-p2", "bound-pair-collapse", inv,
                            {"collision": True, "turning_separation": b_star})
    if abs(beta12_0) > b_star:
        lm = {"collision": False, "turning_separation": b_star}
        lm.update(speeds)
        return RegimeReport("gmch-p2", "one-sided-escape", inv, lm)
    return RegimeReport("gmch-p2", "stationary-pair", inv,
                        {"collision": False, "separation": b_star})


def _phi(B: float, sigma: float) -> float:
    """Antiderivative: Phi(B) = B + ln|1 + sigma exp(-B)|, Phi' = 1/(1+sigma e^-B)."""
    w = abs(1.0 + sigma * math.exp(-B))
    if w == 0.0:
        return -math.inf
    return B + math.log(w)


def _phi_prime(B: float, sigma: float) -> float:
    return 1.0 / (1.0 + sigma * math.exp(-B))


def _solve_monotone(fn, dfn, target: float, lo: float, hi: float,
                    tol: float = 1e-13, maxit: int = 200) -> float:
    """Safeguarded Newton for fn(x) = target on a bracketing interval."""
    f_lo, f_hi = fn(lo) - target, fn(hi) - target
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise ValueError("target not bracketed")
    x = 0.5 * (lo + hi)
    for _ in range(maxit):
        f = fn(x) - target
        if f == 0.0:
            return x
        if f_lo * f < 0:
            hi, f_hi = x, f
        else:
            lo, f_lo = x, f
        d = dfn(x)
        x_new = x - f / d if d != 0.0 else 0.5 * (lo + hi)
        if not (lo < x_new < hi) and not (hi < x_new < lo):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < tol * (1.0 + abs(x)):
            return x_new
        x = x_new
    return x


def gmch_p2_separation_solution(gamma: float, sigma: float, beta12_0: float,
                                t: float) -> float:
    """beta12(t) of betadot12 = gamma (1 + sigma exp(-|beta12|)), beta12(0) given.

    The ODE is separable: Phi(|beta12|) = B + ln|1 + sigma exp(-B)| satisfies
    d Phi(|beta12|)/dt = sgn(beta12) gamma, so the signed quantity
    Psi(beta) = sgn(beta) (Phi(|beta|) - Phi(0)) is linear in t through
    collisions.  Inverted by safeguarded Newton on the monotone branch
    containing the initial state; branches are separated by the turning
    asymptote |beta12| = ln|sigma| when sigma <= -1.
    """
    if gamma == 0.0 or t == 0.0:
        return beta12_0
    if sigma <= -1.0:
        b_star = math.log(abs(sigma))
        b0 = abs(beta12_0)
        if b0 == b_star:
            return beta12_0  # stationary pair
        if b0 > b_star:
            # one-sided branch: |beta12| stays above the asymptote
            s = _sgn(beta12_0)
            target = _phi(b0, sigma) + s * gamma * t
            step = 0.5 * (b0 - b_star)
            while _phi(b_star + step, sigma) > target:
                step *= 0.5
                if step < 1e-300 or _phi(b_star + step, sigma) == -math.inf:
                    return s * b_star
            lo = b_star + step
            hi = max(b0, b_star + 1.0) + abs(gamma * t) * (1.0 + abs(sigma)) + 1.0
            B = _solve_monotone(lambda B: _phi(B, sigma),
                                lambda B: _phi_prime(B, sigma), target, lo, hi)
            return s * B
        # bound branch: |beta12| < ln|sigma|, Psi decreasing from +inf to -inf;
        # beyond double precision the state is indistinguishable from the
        # asymptote, so the bracket search clamps there
        psi = lambda b: _sgn(b) * (_phi(abs(b), sigma) - _phi(0.0, sigma))
        dpsi = lambda b: _phi_prime(abs(b), sigma)
        target = psi(beta12_0) + gamma * t
        eps = 0.5 * (b_star - b0)
        hi = b_star - eps
        while psi(hi) > target:
            eps *= 0.5
            hi = b_star - eps
            if eps < 1e-300 or psi(hi) == -math.inf:
                return b_star
        eps = 0.5 * (b_star - b0)
        lo = -b_star + eps
        while psi(lo) < target:
            eps *= 0.5
            lo = -b_star + eps
            if eps < 1e-300 or psi(lo) == math.inf:
                return -b_star
        return _solve_monotone(psi, dpsi, target, hi, lo)
    # sigma > -1: Psi is increasing on all of R
    psi = lambda b: _sgn(b) * (_phi(abs(b), sigma) - _phi(0.0, sigma))
    dpsi = lambda b: _phi_prime(abs(b), sigma)
    target = psi(beta12_0) + gamma * t
    span = abs(gamma * t) * (1.0 + abs(sigma)) + 1.0
    return _solve_monotone(psi, dpsi, target, beta12_0 - span, beta12_0 + span)
