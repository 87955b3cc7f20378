import math

import numpy as np
import pytest

from peakonfg.conservation import (InvariantReport, TravellingPeakonPath,
                                   default_bump_family, energy, energy_grid,
                                   h1_norm_sq, minimizer_functional, momentum,
                                   monitor_trajectory, single_peakon_energy,
                                   two_peakon_invariants, weak_residual)
from peakonfg.dynamics import PeakonState, rhs_gch, rhs_general, rhs_gmch
from peakonfg.equations import preset
from peakonfg.solver import IntegrationConfig, integrate

RNG_SEED = 20260823
CH = preset("ch")


def ch_rhs(state):
    return rhs_general(CH, state)


def test_momentum_and_h1_closed_forms():
    st = PeakonState(0.0, [2.0, -0.5], [0.0, 1.0])
    assert momentum(st) == pytest.approx(1.5)
    # ||u||_H1^2 = 2 sum_ij alpha_i alpha_j e^{-|b_i - b_j|}
    expected = 2.0 * (4.0 + 0.25 + 2.0 * 2.0 * (-0.5) * math.exp(-1.0))
    assert h1_norm_sq(st) == pytest.approx(expected, rel=1e-14)


def test_single_peakon_h1_norm():
    for a in (-3.0, 0.25, 2.0):
        st = PeakonState(0.0, [a], [0.7])
        assert math.sqrt(h1_norm_sq(st)) == pytest.approx(
            math.sqrt(2.0) * abs(a), rel=1e-14)


def test_single_peakon_energy_ch_closed_form():
    # CH density integrates to (2/3) a^3 for u = a exp(-|x|)
    h = CH.hamiltonian
    for a in (-1.5, 0.5, 2.0):
        assert single_peakon_energy(h, a) == pytest.approx(
            (2.0 / 3.0) * a ** 3, rel=1e-10)


@pytest.mark.parametrize("name,params", [("ch", {}), ("mch", {}),
                                         ("gch", {"p": 2}),
                                         ("gmch", {"p": 2}),
                                         ("gmch", {"p": 1})])
def test_single_peakon_energy_matches_density_quadrature(name, params):
    h = preset(name, **params).hamiltonian
    for a in (-1.2, 0.8, 1.7):
        st = PeakonState(0.0, [a], [0.0])
        assert single_peakon_energy(h, a) == pytest.approx(
            energy(h, st), rel=1e-8, abs=1e-12)


def test_energy_grid_matches_quadrature_for_smooth_field():
    h = preset("mch").hamiltonian
    L = 40.0
    x = np.arange(4096) * (L / 4096) - L / 2
    u = np.exp(-x ** 2)
    ux = -2.0 * x * u
    from scipy.integrate import quad
    from peakonfg.conservation import _energy_density
    ref, _ = quad(lambda y: _energy_density(h, math.exp(-y * y),
                                            -2.0 * y * math.exp(-y * y)),
                  -L / 2, L / 2, limit=500)
    assert energy_grid(h, x, u, ux) == pytest.approx(ref, rel=1e-8)


def test_minimizer_functional_critical_at_peakon():
    # for CH the peakon of amplitude c is a critical point of
    # (1/2) c ||u||^2 + H tilde under amplitude perturbations
    c = 1.3

    def val(a):
        return minimizer_functional(CH.hamiltonian, PeakonState(0.0, [a], [0.0]), -c)

    eps = 1e-5
    deriv = (val(c + eps) - val(c - eps)) / (2 * eps)
    assert abs(deriv) < 1e-6
    assert val(c) < val(0.8 * c)
    assert val(c) < val(1.2 * c)


def test_ch_multipeakon_conservation():
    rng = np.random.default_rng(RNG_SEED)
    s0 = PeakonState(0.0, [1.0, 0.6, 0.3], [-6.0, 0.0, 5.0])
    traj = integrate(ch_rhs, s0, 10.0, IntegrationConfig(stride=0.5))
    report = monitor_trajectory(traj, CH.hamiltonian)
    assert report.max_rel_drift["P"] < 1e-8
    assert report.max_rel_drift["H"] < 1e-7
    assert report.max_rel_drift["H1sq"] < 1e-8


def test_mch_multipeakon_energy_not_conserved():
    # the Hamiltonian-density functionals are single-peakon invariants only
    # for this model: multipeakon interaction makes them drift at O(1)
    mch = preset("mch")
    s0 = PeakonState(0.0, [1.0, 0.5], [-4.0, 0.0])
    traj = integrate(lambda s: rhs_general(mch, s), s0, 10.0,
                     IntegrationConfig(stride=0.5))
    report = monitor_trajectory(traj, mch.hamiltonian)
    assert report.max_rel_drift["P"] < 1e-8
    assert report.max_rel_drift["H"] > 1e-2
    assert report.max_rel_drift["H1sq"] > 1e-2


def test_two_peakon_invariants_conserved_along_flow():
    cases = [("ch", ch_rhs, PeakonState(0.0, [1.0, 0.4], [-3.0, 2.0])),
             ("gch-p2", lambda s: rhs_gch(2, s),
              PeakonState(0.0, [1.0, 0.4], [-3.0, 2.0])),
             ("gmch-p1", lambda s: rhs_gmch(1, s),
              PeakonState(0.0, [1.0, 0.4], [-1.0, 1.0])),
             ("gmch-p2", lambda s: rhs_gmch(2, s),
              PeakonState(0.0, [1.0, 0.4], [-1.0, 1.0]))]
    for model, rhs, s0 in cases:
        traj = integrate(rhs, s0, 4.0, IntegrationConfig(stride=0.5))
        report = monitor_trajectory(traj, model=model)
        ref = two_peakon_invariants(model, s0)
        for name in ref:
            assert report.max_rel_drift[name] < 1e-8, (model, name)


def test_two_peakon_invariants_validation():
    with pytest.raises(ValueError):
        two_peakon_invariants("ch", PeakonState(0.0, [1.0], [0.0]))
    with pytest.raises(ValueError):
        two_peakon_invariants("zzz", PeakonState(0.0, [1.0, 1.0], [0.0, 1.0]))


def test_invariant_report_rows_shape():
    s0 = PeakonState(0.0, [1.0, 0.4], [-2.0, 2.0])
    traj = integrate(ch_rhs, s0, 2.0, IntegrationConfig(stride=1.0))
    report = monitor_trajectory(traj, CH.hamiltonian, model="ch")
    assert isinstance(report, InvariantReport)
    assert report.header() == ["t", "P", "H", "H1sq", "M", "E", "mu"]
    rows = list(report.rows())
    assert len(rows) == len(traj.ts)
    assert all(len(r) == len(report.header()) for r in rows)


def test_weak_residual_true_solution_small():
    s0 = PeakonState(0.0, [1.0, 0.5], [-4.0, 0.0])
    traj = integrate(ch_rhs, s0, 6.0, IntegrationConfig(stride=0.5))
    assert weak_residual(CH, traj) < 1e-5


def test_weak_residual_flags_wrong_speed():
    good = TravellingPeakonPath(a=1.0, c=1.0, t0=0.0, t1=6.0)
    bad = TravellingPeakonPath(a=1.0, c=1.5, t0=0.0, t1=6.0)
    assert weak_residual(CH, good) < 1e-5
    assert weak_residual(CH, bad) > 1e-2


def test_default_bump_family_covers_window():
    s0 = PeakonState(0.0, [1.0], [0.0])
    traj = integrate(ch_rhs, s0, 4.0, IntegrationConfig(stride=1.0))
    tests = default_bump_family(traj)
    assert len(tests) == 16
    tcs = sorted({t.tc for t in tests})
    assert tcs[0] - tests[0].rt == pytest.approx(0.0, abs=1e-12)
    assert tcs[-1] + tests[0].rt == pytest.approx(4.0, abs=1e-12)
