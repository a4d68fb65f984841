import numpy as np
import pytest

from skgsim.montecarlo import sample_channel_power, sample_noise_power, sample_path_gains, sample_total_power


def test_path_gain_moments(rng):
    g = sample_path_gains(4, 3.0, 0.5, 200_000, rng)
    assert g.shape == (200_000, 4)
    assert g[:, 0].mean() == pytest.approx(3.0, abs=0.01)
    np.testing.assert_allclose(g[:, 1:].var(axis=0), 2 * 0.25, rtol=0.02)


@pytest.mark.parametrize("case, mean", [("unresolved", 100 ** 2 + 2 * 14 * 25),
                                        ("resolved", 100 ** 2 + 2 * 14 * 25)])
def test_channel_power_mean(case, mean, rng):
    p = sample_channel_power(case, 100.0, 5.0, 50_000, rng, L=14)
    assert p.mean() == pytest.approx(mean, rel=0.01)


def test_unresolved_and_resolved_variances_differ(rng):
    u = sample_channel_power("unresolved", 100.0, 5.0, 50_000, rng, L=14)
    r = sample_channel_power("resolved", 100.0, 5.0, 50_000, rng, L=14)
    # coherent sum: var = 4 nu^2 L s^2 + 4 L^2 s^4; power sum: 4 nu^2 s^2 + 4 L s^4
    assert u.var() == pytest.approx(4 * 1e4 * 14 * 25 + 4 * 14 ** 2 * 625, rel=0.05)
    assert r.var() == pytest.approx(4 * 1e4 * 25 + 4 * 14 * 625, rel=0.05)


def test_noise_power_moments(rng):
    p = sample_noise_power(500, 2.0, 20_000, rng)
    assert p.mean() == pytest.approx(8.0, rel=0.005)
    assert p.var() == pytest.approx(4 * 16 * 2 / 499 * 1.0, rel=0.05)


def test_noise_chunking_consistent():
    a = sample_noise_power(100, 1.0, 1000, np.random.default_rng(0), chunk_samples=10_000)
    b = sample_noise_power(100, 1.0, 1000, np.random.default_rng(0), chunk_samples=100_000)
    np.testing.assert_allclose(a, b)


def test_total_is_sum(rng):
    t = sample_total_power("hybrid", 10.0, 1.0, 5000, rng, C=100, sigma_w=1.0, bins=(2, 3))
    assert t.mean() == pytest.approx(100 + 10 + 2, rel=0.02)


def test_errors(rng):
    with pytest.raises(ValueError):
        sample_channel_power("hybrid", 1.0, 1.0, 10, rng)
    with pytest.raises(ValueError):
        sample_channel_power("bogus", 1.0, 1.0, 10, rng, L=2)
    with pytest.raises(ValueError):
        sample_channel_power("resolved", 1.0, 1.0, 10, rng)
