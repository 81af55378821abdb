import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from dacinl import binary, density


def _closed_m1(y):
    return 4 * math.sqrt(2 / math.pi) * math.exp(-8 * y * y)


@pytest.mark.parametrize("y", [0.0, 0.2, 0.5, 1.0])
def test_m1_closed_form(y):
    assert density.density_Mm(y, 1) == pytest.approx(_closed_m1(y), abs=1e-10)


def test_m1_value_at_zero():
    assert density.density_Mm(0.0, 1) == pytest.approx(3.19154, abs=1e-5)


def test_m2_against_bivariate_normal_oracle():
    # M^(2) = (|N1| + |N2|)/2; f(y) = 2 * int_0^{2y} p_|N|(x, 2y - x) dx with p from scipy
    mvn = stats.multivariate_normal(mean=[0, 0], cov=binary.cov_matrix(2))
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]

    def f(y):
        g = lambda x: sum(mvn.pdf([sx * x, sy * (2 * y - x)]) for sx, sy in signs)
        return 2 * integrate.quad(g, 0, 2 * y, epsabs=1e-12)[0]

    for y in (0.1, 0.4, 0.9):
        assert density.density_Mm(y, 2) == pytest.approx(f(y), abs=1e-8)


@pytest.mark.parametrize("m", [2, 3])
def test_normalization(m):
    total = integrate.quad(lambda y: density.density_Mm(y, m), 0, 3.0, limit=200, epsabs=1e-9)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_mean_of_m2_density():
    mean = integrate.quad(lambda y: y * density.density_Mm(y, 2), 0, 3.0, limit=200, epsabs=1e-10)[0]
    assert mean == pytest.approx(binary.mean_M_partial(2), abs=1e-7)


def test_guards():
    with pytest.raises(ValueError):
        density.density_Mm(0.5, 6)
    with pytest.raises(ValueError):
        density.density_Mm(-0.1, 2)
    with pytest.raises(ValueError):
        density.density_Mm(0.5, 0)
    assert density.density_Mm(0.0, 3) == 0.0


def test_abs_joint_density_integrates_to_one():
    total = integrate.dblquad(lambda b, a: density.abs_joint_density([a, b], 2), 0, 3, 0, 3, epsabs=1e-9)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_kde_m1_bandwidth_001():
    grid = np.arange(0.0, 2.0, 0.01)
    est = density.density_M_mc(grid, 1, samples=1_000_000, bandwidth=0.01, seed=1)
    exact = np.array([_closed_m1(y) for y in grid])
    assert np.abs(est - exact).max() < 0.05


def test_kde_integrates_to_one():
    grid = np.arange(0.0, 3.0, 0.005)
    est = density.density_M_mc(grid, 4, samples=1_000_000, seed=2)
    assert np.trapezoid(est, grid) == pytest.approx(1.0, abs=0.01)


def test_kde_guards():
    with pytest.raises(ValueError):
        density.kde_boundary(np.ones(10), np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        density.kde_boundary(-np.ones(10), np.zeros(3), 0.1)
    with pytest.raises(ValueError):
        density.density_M_mc(np.zeros(3), 2, samples=100)


def test_kde_reproduces_linear_density_at_boundary():
    # f(y) = 2y on [0, 1]: sampled as sqrt(U)
    s = np.sqrt(np.random.default_rng(3).random(2_000_000))
    est = density.kde_boundary(s, np.array([0.0, 0.05, 0.5]), 0.02)
    assert est == pytest.approx([0.0, 0.1, 1.0], abs=0.02)


@settings(max_examples=200, deadline=None)
@given(z=st.floats(-40, 40))
def test_dawson_matches_scipy(z):
    assert density.dawson(z) == pytest.approx(special.dawsn(z), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0, 4.0])
def test_half_normal_cf_against_quadrature(k):
    re = integrate.quad(lambda z: math.cos(k * z) * stats.norm.pdf(z), 0, np.inf, epsabs=1e-13)[0]
    im = integrate.quad(lambda z: math.sin(k * z) * stats.norm.pdf(z), 0, np.inf, epsabs=1e-13, limit=200)[0]
    assert abs(density.half_normal_cf(k) - complex(re, im)) < 1e-8


@settings(max_examples=200, deadline=None)
@given(k=st.floats(-30, 30))
def test_half_normal_cf_symmetry(k):
    h = density.half_normal_cf
    assert abs(h(k) + h(-k) - math.exp(-k * k / 2)) < 1e-12
    assert h(-k) == h(k).conjugate()


def test_half_normal_cf_guards():
    assert density.half_normal_cf(0.0) == 0.5
    with pytest.raises(ValueError):
        density.half_normal_cf(31.0)
    with pytest.raises(ValueError):
        density.half_normal_cf(math.nan)


def test_block_cf_against_sampling():
    l, ka, kl = 2, 1.3, -0.7
    z = np.random.default_rng(4).standard_normal(2_000_000) * 2.0 ** (-l / 2)
    emp = np.mean(np.exp(1j * (ka * np.abs(z) + kl * z)))
    assert abs(density.block_cf(l, ka, kl) - emp) < 3e-3
    assert density.block_cf(l, 0.0, 0.0) == pytest.approx(1.0)
