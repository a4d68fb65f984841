import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skgsim.mi import MiEstimate
from skgsim.skg import RateBounds, skg_bounds


def test_no_leakage_closes_gap():
    r = skg_bounds(1.7, 0.0)
    assert r.lower == r.upper == 1.7


def test_direct_arithmetic():
    r = skg_bounds(2.0, 0.5)
    assert (r.lower, r.upper) == (1.5, 2.0)
    assert not r.clamped


def test_negative_gap_clamped():
    r = skg_bounds(0.4, 0.9)
    assert r.lower == 0.0 and r.upper == 0.4 and r.clamped


def test_accepts_estimates_in_bits():
    ab = MiEstimate(np.log(2) * 3, k=5, n_samples=100)
    ae = MiEstimate(np.log(2) * 1, k=5, n_samples=100)
    r = skg_bounds(ab, ae)
    assert r.upper == pytest.approx(3.0) and r.lower == pytest.approx(2.0)


def test_mismatched_counts_warn():
    ab = MiEstimate(1.0, k=5, n_samples=100)
    ae = MiEstimate(0.5, k=5, n_samples=200)
    with pytest.warns(UserWarning, match="sample counts differ"):
        r = skg_bounds(ab, ae)
    assert r.upper == pytest.approx(ab.bits)


def test_matched_counts_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        skg_bounds(MiEstimate(1.0, 5, 100), MiEstimate(0.5, 5, 100))


def test_rate_bounds_invariant():
    with pytest.raises(ValueError):
        RateBounds(lower=2.0, upper=1.0, i_ab=1.0, i_ae=0.0)


@given(ab=st.floats(0, 20), ae1=st.floats(0, 20), ae2=st.floats(0, 20))
def test_monotone_in_leakage(ab, ae1, ae2):
    lo, hi = sorted((ae1, ae2))
    r1, r2 = skg_bounds(ab, lo), skg_bounds(ab, hi)
    assert r2.lower <= r1.lower
    assert r1.upper == r2.upper == ab
    assert 0 <= r2.lower <= r2.upper
