import math

import numpy as np
import pytest

from peakonfg.dynamics import (PeakonState, field_eval, field_time_derivative,
                               local_data, rhs_gch, rhs_general, rhs_gmch,
                               single_peakon_test, speed_amplitude)
from peakonfg.equations import FgEquation, preset
from peakonfg import expr

RNG_SEED = 20260823


def test_state_validation():
    with pytest.raises(ValueError):
        PeakonState(0.0, [1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        PeakonState(0.0, [], [])
    with pytest.raises(ValueError):
        PeakonState(0.0, [math.nan], [0.0])


def test_local_data_peakon_antipeakon():
    # alpha = (1, -1), beta = (0, ln 2): U1 = 1/2, V1 = -1/2 (the anti-peakon
    # to the right pulls the slope down), U2 = -1/2, V2 = -1/2
    st = PeakonState(0.0, [1.0, -1.0], [0.0, math.log(2.0)])
    loc = local_data(st)
    assert loc.U[0] == pytest.approx(0.5)
    assert loc.V[0] == pytest.approx(-0.5)
    assert loc.U[1] == pytest.approx(-0.5)
    assert loc.V[1] == pytest.approx(-0.5)


def test_field_eval_single_peakon():
    st = PeakonState(0.0, [2.0], [1.0])
    u, ux = field_eval(st, 3.0)
    assert u == pytest.approx(2.0 * math.exp(-2.0))
    assert ux == pytest.approx(-2.0 * math.exp(-2.0))
    x = np.array([-1.0, 1.0, 2.0])
    u, ux = field_eval(st, x)
    assert u[1] == pytest.approx(2.0)
    assert ux[1] == 0.0  # sgn(0) = 0 at the crest


def test_ch_one_peakon_rhs():
    ch = preset("ch")
    st = PeakonState(0.0, [1.5], [0.0])
    d = rhs_general(ch, st)
    assert d.alphadots[0] == pytest.approx(0.0, abs=1e-14)
    assert d.betadots[0] == pytest.approx(1.5, rel=1e-12)


def test_rhs_closed_forms_match_quadrature():
    rng = np.random.default_rng(RNG_SEED)
    for p in (1, 2, 3):
        gch = preset("gch", p=p)
        gmch = preset("gmch", p=p)
        bare_gch = FgEquation(name="q", f=gch.f, g=gch.g)
        bare_gmch = FgEquation(name="q", f=gmch.f, g=gmch.g)
        for n in (1, 2, 4):
            st = PeakonState(0.0, rng.normal(size=n), rng.normal(size=n) * 3)
            for rhs_fast, bare in ((lambda s: rhs_gch(p, s), bare_gch),
                                   (lambda s: rhs_gmch(p, s), bare_gmch)):
                fast = rhs_fast(st)
                slow = rhs_general(bare, st)
                assert np.allclose(fast.alphadots, slow.alphadots,
                                   rtol=1e-9, atol=1e-9)
                assert np.allclose(fast.betadots, slow.betadots,
                                   rtol=1e-9, atol=1e-9)


def test_gmch_amplitudes_frozen():
    rng = np.random.default_rng(RNG_SEED + 1)
    st = PeakonState(0.0, rng.normal(size=3), rng.normal(size=3))
    for p in (1, 2):
        assert np.all(rhs_gmch(p, st).alphadots == 0.0)


def test_zero_amplitude_limit():
    ch = preset("ch")
    st = PeakonState(0.0, [1.0, 0.0], [0.0, 1.0])
    d = rhs_general(ch, st)
    assert d.degenerate == (1,)
    # betadot of the ghost node is g(U, V) = U = e^{-1}
    assert d.betadots[1] == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_single_peakon_travelling_wave_presets():
    for name, params, law in [("ch", {}, lambda a: a),
                              ("dp", {}, lambda a: a),
                              ("novikov", {}, lambda a: a * a),
                              ("mch", {}, lambda a: (2.0 / 3.0) * a * a)]:
        eq = preset(name, **params)
        for a in (-2.0, -1.0, 0.5, 1.0):
            res = single_peakon_test(eq, a)
            assert res.is_travelling_wave
            assert res.c == pytest.approx(law(a), rel=1e-10)
            assert speed_amplitude(eq, a) == pytest.approx(law(a), rel=1e-10)


def test_single_peakon_condition_fails_for_odd_f():
    # f = u breaks the even-in-u_x requirement F(a, a) = F(a, -a)
    eq = FgEquation(name="odd", f=expr.parse("u"), g=expr.parse("u"))
    res = single_peakon_test(eq, 1.0)
    assert not res.is_travelling_wave
    assert res.condition_residual > 1e-3


def test_single_peakon_zero_amplitude_rejected():
    with pytest.raises(ValueError):
        single_peakon_test(preset("ch"), 0.0)


def test_field_time_derivative_consistency():
    # u_t from (alphadot, betadot) must match finite differences of the field
    ch = preset("ch")
    rng = np.random.default_rng(RNG_SEED + 2)
    st = PeakonState(0.0, [1.0, 0.6], [-1.0, 1.0])
    d = rhs_general(ch, st)
    dt = 1e-6
    st_p = PeakonState(dt, st.alphas + dt * d.alphadots, st.betas + dt * d.betadots)
    st_m = PeakonState(-dt, st.alphas - dt * d.alphadots, st.betas - dt * d.betadots)
    x = rng.uniform(-4, 4, size=20)
    u_p, _ = field_eval(st_p, x)
    u_m, _ = field_eval(st_m, x)
    ut = field_time_derivative(st, d, x)
    assert np.allclose(ut, (u_p - u_m) / (2 * dt), rtol=1e-6, atol=1e-7)
