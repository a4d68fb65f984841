import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skgsim.chanmodel import (CirRealization, LosGainSpec, TapProfile, correlated_eve_gains,
                              draw_cir, draw_gains, draw_reciprocal_pair, empirical_k_factor_db,
                              load_tap_profile, rms_delay_spread, scale_profile, single_tap_profile,
                              specular_fraction, tdl_e_profile)


def two_tap(k_db=0.0):
    return TapProfile.from_arrays([0.0, 100e-9], [0.5, 0.5], k_db)


# loading ------------------------------------------------------------------

def test_single_tap_source():
    p = load_tap_profile([{"delay_ns": 0, "power_db": 0, "los": True}])
    assert p.num_taps == 1
    assert p.rms_delay_spread == 0.0
    assert p.taps[0].is_los


def test_tdl_e_has_14_taps_los_first():
    p = tdl_e_profile()
    assert p.num_taps == 14
    assert p.taps[0].is_los and not any(t.is_los for t in p.taps[1:])
    assert p.powers.sum() == pytest.approx(1.0, abs=1e-9)


def test_tdl_e_native_parameters():
    # 38.901 TDL-E: LoS -0.03 dB against scattered sum, tap-1 Rayleigh at -22.03 dB
    p = tdl_e_profile()
    assert p.k_factor_db == pytest.approx(9.27, abs=0.01)
    assert p.delays[1] == pytest.approx(51.33e-9)
    assert p.delays[-1] == pytest.approx(2065.19e-9)


def test_unnormalized_powers_are_normalized():
    p = load_tap_profile([{"delay_ns": 0, "power": 2, "los": True},
                          {"delay_ns": 10, "power": 2, "los": False}])
    np.testing.assert_allclose(p.powers, [0.5, 0.5])


@pytest.mark.parametrize("rows, msg", [
    ([{"delay_ns": 0, "power": 1, "los": False}], "no LoS"),
    ([{"delay_ns": 0, "power": 1, "los": True}, {"delay_ns": 5, "power": 1, "los": True}], "more than one"),
    ([{"delay_ns": 0, "power": 1, "los": True}, {"delay_ns": 5, "power": 1},
      {"delay_ns": 5, "power": 1}], "duplicate"),
    ([{"delay_ns": 0, "power": 0, "los": True}], "positive"),
    ([{"delay_ns": 0, "power": -1, "los": True}], "positive"),
    ([{"delay_ns": 0, "los": True}], "missing"),
    ([{"delay_ns": 10, "power": 1, "los": True}, {"delay_ns": 5, "power": 1}], "earliest"),
    ([], "no taps"),
])
def test_load_errors(rows, msg):
    with pytest.raises(ValueError, match=msg):
        load_tap_profile(rows)


def test_coincident_delays_allowed_on_request():
    rows = [{"delay_ns": 0, "power": 1, "los": True}, {"delay_ns": 5, "power": 1},
            {"delay_ns": 5, "power": 1}]
    assert load_tap_profile(rows, allow_coincident=True).num_taps == 3


def test_load_from_path(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"name": "x", "taps": [{"delay_ns": 0, "power_db": 0, "los": True},
                                                     {"delay_ns": 30, "power_db": -10}]}))
    p = load_tap_profile(path)
    assert p.name == "x"
    assert p.delays[1] == pytest.approx(30e-9)
    assert p.k_factor_db == pytest.approx(10.0)


def test_profile_rejects_inconsistent_spread():
    p = two_tap(-math.inf)
    assert p.rms_delay_spread == pytest.approx(50e-9)
    with pytest.raises(ValueError):
        TapProfile(p.taps, p.rms_delay_spread * 1.1, p.k_factor_db)


def test_profile_rejects_los_not_first():
    p = two_tap()
    with pytest.raises(ValueError):
        TapProfile(p.taps[::-1], p.rms_delay_spread, p.k_factor_db)


# scaling ------------------------------------------------------------------

def test_scale_fixed_point():
    p = tdl_e_profile()
    q = scale_profile(p, p.rms_delay_spread, p.k_factor_db)
    np.testing.assert_allclose(q.powers, p.powers, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(q.delays, p.delays)


def test_scale_tdl_e_to_50ns():
    q = scale_profile(tdl_e_profile(), 50e-9, 30.0)
    assert rms_delay_spread(q.delays, q.scattered_powers) == pytest.approx(50e-9, rel=1e-6)
    assert q.rms_delay_spread == pytest.approx(50e-9, rel=1e-6)


def test_two_tap_k_10db_ratio():
    q = scale_profile(two_tap(0.0), two_tap().rms_delay_spread, 10.0)
    assert q.los_specular_power / q.scattered_powers.sum() == pytest.approx(10.0, rel=1e-9)
    assert q.powers.sum() == pytest.approx(1.0, abs=1e-12)


def test_scale_single_tap_with_spread_raises():
    with pytest.raises(ValueError):
        scale_profile(single_tap_profile(), 50e-9, math.inf)


def test_scale_rejects_negative_spread():
    with pytest.raises(ValueError):
        scale_profile(tdl_e_profile(), -1e-9, 10.0)


@given(ds=st.floats(10e-9, 400e-9), k_db=st.floats(-10, 40))
def test_scale_properties(ds, k_db):
    q = scale_profile(tdl_e_profile(), ds, k_db)
    assert q.powers.sum() == pytest.approx(1.0, abs=1e-9)
    assert q.rms_delay_spread == pytest.approx(ds, rel=1e-6)
    assert q.los_specular_power / q.scattered_powers.sum() == pytest.approx(10 ** (k_db / 10), rel=1e-9)
    assert np.all(np.diff(q.delays) >= 0)
    r = scale_profile(q, ds, k_db)
    np.testing.assert_allclose(r.powers, q.powers, atol=1e-15)
    np.testing.assert_allclose(r.delays, q.delays, rtol=1e-12)


def test_specular_fraction_limits():
    assert specular_fraction(math.inf) == 1.0
    assert specular_fraction(-math.inf) == 0.0
    assert specular_fraction(0.0) == 0.5


# draws --------------------------------------------------------------------

def test_deterministic_los_when_no_scatter():
    los = LosGainSpec(nu=3.0, sigma=1e-300, theta=0.4)
    g = draw_gains(single_tap_profile(), 4, np.random.default_rng(0), los)
    np.testing.assert_allclose(np.abs(g), 3.0, rtol=1e-15)


def test_rayleigh_tap_mean_power(rng):
    p = TapProfile.from_arrays([0.0, 10e-9], [0.7, 0.3], -math.inf)
    g = draw_gains(p, 100_000, rng)
    assert np.mean(np.abs(g[:, 1]) ** 2) == pytest.approx(0.3, rel=0.01)


def test_same_seed_same_cir():
    p = tdl_e_profile()
    assert draw_cir(p, np.random.default_rng(7)) == draw_cir(p, np.random.default_rng(7))


def test_reciprocal_pair_exact():
    for seed in range(5):
        a, b = draw_reciprocal_pair(tdl_e_profile(), np.random.default_rng(seed))
        assert a.gains.tobytes() == b.gains.tobytes()
        assert a.gains is not b.gains


def test_eve_independent(rng):
    p = scale_profile(tdl_e_profile(), 50e-9, 10.0)
    a = draw_gains(p, 10_000, rng)
    e = draw_gains(p, 10_000, rng)
    assert not np.array_equal(a, e)
    for i in range(p.num_taps):
        assert abs(np.corrcoef(np.abs(a[:, i]), np.abs(e[:, i]))[0, 1]) < 0.03


def test_per_tap_second_moment(rng):
    p = scale_profile(tdl_e_profile(), 100e-9, 5.0)
    n = 100_000
    g = draw_gains(p, n, rng)
    np.testing.assert_allclose(np.mean(np.abs(g) ** 2, axis=0), p.powers, rtol=3 / math.sqrt(n) * 3)


@pytest.mark.parametrize("k_db", [0.0, 10.0, 20.0])
def test_empirical_k_factor(k_db, rng):
    p = scale_profile(tdl_e_profile(), 50e-9, k_db)
    assert empirical_k_factor_db(draw_gains(p, 100_000, rng)) == pytest.approx(k_db, abs=0.5)


def test_eve_mixing(rng):
    p = scale_profile(tdl_e_profile(), 50e-9, 0.0)
    a, f = draw_gains(p, 50_000, rng), draw_gains(p, 50_000, rng)
    assert correlated_eve_gains(a, f, p, 0.0) is f
    e = correlated_eve_gains(a, f, p, 0.8)
    c = np.corrcoef(a[:, 3].real, e[:, 3].real)[0, 1]
    assert c == pytest.approx(0.8, abs=0.02)
    np.testing.assert_allclose(np.mean(np.abs(e) ** 2, axis=0), p.powers, rtol=0.05)
    with pytest.raises(ValueError):
        correlated_eve_gains(a, f, p, 1.5)


def test_cir_validation():
    with pytest.raises(ValueError):
        CirRealization(np.ones(2, complex), np.array([0.0]))
    with pytest.raises(ValueError):
        LosGainSpec(nu=-1, sigma=1)
    with pytest.raises(ValueError):
        LosGainSpec(nu=1, sigma=0)
