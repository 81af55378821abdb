import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dacinl.mismatch import (
    DacSpec,
    UnitCurrentVector,
    i_lsb,
    sample_unit_currents,
    trial_normals,
    unit_normals,
    uniform_words_to_normal,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        DacSpec(0)
    with pytest.raises(ValueError):
        DacSpec(31)
    with pytest.raises(ValueError):
        DacSpec(4, mean_current=0.0)
    with pytest.raises(ValueError):
        DacSpec(4, sigma_u=-1e-3)
    with pytest.raises(ValueError):
        DacSpec(4, sigma_u=math.inf)
    spec = DacSpec.from_relative(10, 0.02, mean_current=5.0)
    assert spec.unit_count == 1023
    assert spec.sigma_u == pytest.approx(0.1)
    assert spec.relative_matching == pytest.approx(0.02)


def test_zero_sigma_exact():
    spec = DacSpec(12, mean_current=0.1, sigma_u=0.0)
    u = sample_unit_currents(spec, seed=3)
    assert u.i_lsb == 0.1
    assert u.full_scale == 4095 * 0.1
    assert np.all(u.currents == 0.1)


def test_i_lsb_rejects_bad_input():
    with pytest.raises(ValueError):
        i_lsb([])
    with pytest.raises(ValueError):
        i_lsb([1.0, math.nan])
    assert i_lsb([1.0, 2.0, 3.0]) == 2.0


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.01, 100.0), seed=st.integers(0, 2**64 - 1))
def test_scaling_currents_scales_lsb(scale, seed):
    u = sample_unit_currents(DacSpec.from_relative(6, 0.05), seed)
    v = UnitCurrentVector.from_currents(scale * u.currents)
    assert v.i_lsb == pytest.approx(scale * u.i_lsb, rel=1e-12)
    assert v.full_scale == pytest.approx(scale * u.full_scale, rel=1e-12)


def test_sample_moments_within_four_sigma():
    mean, sigma = 2.0, 0.03
    x = mean + sigma * unit_normals(seed=17, trial=0, count=1_000_000)
    n = x.size
    assert abs(x.mean() - mean) < 4 * sigma / math.sqrt(n)
    # Var of the sample variance of normals is 2 sigma^4 / (n - 1)
    assert abs(x.var(ddof=1) - sigma**2) < 4 * sigma**2 * math.sqrt(2 / (n - 1))


def test_normals_pass_ks_against_standard_normal():
    from scipy import stats

    z = unit_normals(seed=5, trial=2, count=200_000)
    assert stats.kstest(z, "norm").pvalue > 1e-3


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    trial=st.integers(0, 10**6),
    start=st.integers(0, 50),
    count=st.integers(1, 40),
)
def test_random_access_matches_prefix(seed, trial, start, count):
    full = unit_normals(seed, trial, start + count)
    assert np.array_equal(unit_normals(seed, trial, count, start=start), full[start:])


def test_streams_and_trials_are_distinct():
    a = unit_normals(1, 0, 64)
    assert not np.array_equal(a, unit_normals(1, 1, 64))
    assert not np.array_equal(a, unit_normals(1, 0, 64, stream=1))
    assert not np.array_equal(a, unit_normals(2, 0, 64))
    rows = trial_normals(1, range(3, 6), 16)
    assert np.array_equal(rows[1], unit_normals(1, 4, 16))


def test_uniform_mapping_is_finite_at_extremes():
    words = np.array([0, 2**64 - 1], dtype=np.uint64)
    z = uniform_words_to_normal(words)
    assert np.all(np.isfinite(z))
    assert z[0] == pytest.approx(-z[1], rel=1e-12)
    assert abs(z[1]) < 8.3


def test_seed_range():
    with pytest.raises(ValueError):
        unit_normals(-1, 0, 4)
    with pytest.raises(ValueError):
        unit_normals(2**64, 0, 4)
