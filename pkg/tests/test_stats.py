import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dacinl.stats import ks_2samp, wilson_interval


@settings(max_examples=100, deadline=None)
@given(trials=st.integers(1, 10**6), data=st.data())
def test_wilson_contains_estimate(trials, data):
    k = data.draw(st.integers(0, trials))
    lo, hi = wilson_interval(k, trials)
    assert 0.0 <= lo <= k / trials <= hi <= 1.0


def test_wilson_known_value():
    # closed form for k=10, n=100, z=1.959963984540054
    lo, hi = wilson_interval(10, 100)
    assert lo == pytest.approx(0.05522914, abs=1e-7)
    assert hi == pytest.approx(0.17436566, abs=1e-7)


def test_wilson_validation():
    with pytest.raises(ValueError):
        wilson_interval(1, 0)
    with pytest.raises(ValueError):
        wilson_interval(5, 4)


def test_ks_against_scipy_limit_law():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=3000), rng.normal(0.05, 1, size=4000)
    d, p = ks_2samp(a, b)
    ref = stats.ks_2samp(a, b)
    assert d == pytest.approx(ref.statistic, abs=1e-15)
    en = np.sqrt(a.size * b.size / (a.size + b.size))
    assert p == pytest.approx(stats.kstwobign.sf(en * d), rel=1e-9)


def test_ks_self_comparison_is_null():
    rng = np.random.default_rng(1)
    a = rng.normal(size=5000)
    assert ks_2samp(a, a) == (0.0, 1.0)
