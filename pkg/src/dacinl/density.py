"""Densities related to the binary limit law.

``density_Mm`` evaluates the density of the truncated law
``M^(m) = 1/2 (|N_1| + ... + |N_m|)`` by integrating the density of the
absolute-value vector ``|N^(m)|`` over the simplex ``sum n_i = 2y``. The
integrand is compiled with numba and handed to QUADPACK as a low-level
callable; outer axes are nested ``scipy.integrate.quad`` calls.

``half_normal_cf`` is ``E[exp(ikZ) 1{Z >= 0}]`` for standard normal Z.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numba as nb
import numpy as np
from numba import types
from scipy import LowLevelCallable
from scipy.integrate import quad
from scipy.special import ndtr

from . import binary

MAX_QUAD_ORDER = 5
MAX_CF_ARG = 30.0
_SERIES_LIMIT = 4.0 / math.sqrt(2.0)  # |k| <= 4
_CF_TERMS = 120


def sign_vectors(m: int) -> np.ndarray:
    """All 2**m vectors in {-1, 1}**m."""
    bits = (np.arange(2**m)[:, None] >> np.arange(m)) & 1
    return 1.0 - 2.0 * bits


def abs_joint_density(n, m: int) -> float:
    """Density of |N^(m)| at a point of [0, inf)**m (sum over sign patterns)."""
    n = np.asarray(n, dtype=float)
    if n.shape != (m,):
        raise ValueError(f"expected a point of length {m}")
    q = binary.inv_cov(m)
    norm = (2.0 * math.pi) ** (-m / 2.0) / math.sqrt(binary.det_cov(m))
    v = sign_vectors(m) * n
    quad_forms = np.einsum("si,ij,sj->s", v, q, v)
    return float(norm * np.exp(-0.5 * quad_forms).sum())


# Argument layout after the integration variable x = n_{m-1}:
#   [m, 2y, norm, Q (m*m row-major), n_1 .. n_{m-2}]
@nb.cfunc(types.float64(types.intc, types.CPointer(types.float64)), cache=True)
def _simplex_integrand(count, xx):
    m = int(xx[1])
    two_y = xx[2]
    norm = xx[3]
    q0 = 4
    fixed0 = q0 + m * m
    pt = np.empty(m)
    rest = two_y
    for i in range(m - 2):
        pt[i] = xx[fixed0 + i]
        rest -= pt[i]
    pt[m - 2] = xx[0]
    rest -= xx[0]
    if rest < 0.0:
        rest = 0.0
    pt[m - 1] = rest
    total = 0.0
    for s in range(1 << m):
        acc = 0.0
        for i in range(m):
            si = -pt[i] if (s >> i) & 1 else pt[i]
            row = 0.0
            for j in range(m):
                sj = -pt[j] if (s >> j) & 1 else pt[j]
                row += xx[q0 + i * m + j] * sj
            acc += si * row
        total += math.exp(-0.5 * acc)
    return norm * total


@lru_cache(maxsize=1)
def _integrand() -> LowLevelCallable:
    return LowLevelCallable(_simplex_integrand.ctypes)


def density_Mm(y: float, m: int, quad_tol: float = 1e-9) -> float:
    """Density of M^(m) at ``y`` by nested adaptive quadrature (1 <= m <= 5).

    Each of the m-1 axes is integrated with Gauss-Kronrod to absolute
    tolerance ``quad_tol / m``.
    """
    if y < 0 or math.isnan(y):
        raise ValueError(f"y must be non-negative, got {y}")
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > MAX_QUAD_ORDER:
        raise ValueError(f"quadrature is limited to m <= {MAX_QUAD_ORDER}; use density_M_mc for larger m")
    if m == 1:
        return 2.0 * abs_joint_density([2.0 * y], 1)
    if y == 0:
        return 0.0
    q = binary.inv_cov(m)
    norm = (2.0 * math.pi) ** (-m / 2.0) / math.sqrt(binary.det_cov(m))
    head = (float(m), 2.0 * y, norm, *q.ravel())
    tol = quad_tol / m
    func = _integrand()

    def level(prefix: tuple, remaining: float) -> float:
        if len(prefix) == m - 2:
            val, _ = quad(func, 0.0, remaining, args=head + prefix, epsabs=tol, epsrel=1e-10, limit=200)
            return val
        val, _ = quad(
            lambda x: level(prefix + (x,), remaining - x),
            0.0, remaining, epsabs=tol, epsrel=1e-10, limit=200,
        )
        return val

    return 2.0 * level((), 2.0 * y)


def density_grid(grid: np.ndarray, m: int, quad_tol: float = 1e-9) -> np.ndarray:
    return np.array([density_Mm(float(y), m, quad_tol) for y in grid])


def kde_boundary(samples: np.ndarray, grid: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian KDE on [0, inf) with local-linear boundary correction.

    Near 0 the kernel is replaced by (a2 - a1 u) K(u) / (a0 a2 - a1^2), with
    a_j the partial moments of K over the support, so both constant and
    linear densities are reproduced at the boundary (plain reflection forces
    zero slope and overshoots densities that vanish at 0). Away from the
    boundary this is the ordinary Gaussian KDE. Computed from fine bins of
    width bandwidth/20; negative values are clipped to 0.
    """
    if not (math.isfinite(bandwidth) and bandwidth > 0):
        raise ValueError(f"bandwidth must be positive and finite, got {bandwidth}")
    samples = np.asarray(samples, dtype=float)
    if np.any(samples < 0):
        raise ValueError("samples must be non-negative")
    width = bandwidth / 20.0
    nbins = int(math.ceil(samples.max() / width)) + 1
    counts = np.bincount(np.minimum((samples / width).astype(np.int64), nbins - 1), minlength=nbins)
    keep = np.nonzero(counts)[0]
    centres = (keep + 0.5) * width
    weights = counts[keep] / (samples.size * bandwidth)
    grid = np.asarray(grid, dtype=float)
    p = grid / bandwidth
    a0 = ndtr(p)
    a1 = -np.exp(-0.5 * p * p) / math.sqrt(2.0 * math.pi)
    a2 = a0 + p * a1
    det = a0 * a2 - a1 * a1
    out = np.empty(grid.shape)
    for i in range(0, grid.size, 64):
        sl = slice(i, i + 64)
        u = (grid[sl, None] - centres) / bandwidth
        k = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        plain = k @ weights
        tilt = (u * k) @ weights
        out[sl] = (a2[sl] * plain - a1[sl] * tilt) / det[sl]
    return np.maximum(out, 0.0)


def density_M_mc(
    grid: np.ndarray,
    m: int | None = None,
    samples: int = 1_000_000,
    bandwidth: float = 0.01,
    seed: int = 0,
) -> np.ndarray:
    """Kernel density estimate of M^(m) (or of M when ``m`` is None) on ``grid``."""
    if samples < 10_000:
        raise ValueError("density_M_mc needs at least 1e4 samples")
    depth = binary.DEFAULT_DEPTH if m is None else m
    rng = np.random.default_rng(seed)
    draws = np.concatenate(
        [binary.sample_M(depth, rng, min(200_000, samples - s)) for s in range(0, samples, 200_000)]
    )
    return kde_boundary(draws, grid, bandwidth)


def dawson(z: float) -> float:
    """Dawson's integral exp(-z^2) * int_0^z exp(t^2) dt.

    Positive-term power series for |z| <= 4/sqrt(2), continued fraction
    beyond; neither evaluates the growing exponential directly.
    """
    a = abs(z)
    if a <= _SERIES_LIMIT:
        z2 = a * a
        term = a
        total = a
        n = 0
        while term > 1e-17 * total:
            n += 1
            term *= z2 / n
            total += term / (2 * n + 1)
        val = math.exp(-z2) * total
    else:
        z2 = a * a
        t = 0.0
        for k in range(_CF_TERMS, 0, -1):
            t = 4.0 * k * z2 / (2 * k + 1 + 2.0 * z2 - t)
        val = a / (1.0 + 2.0 * z2 - t)
    return math.copysign(val, z)


def half_normal_cf(k: float) -> complex:
    """E[exp(ikZ) 1{Z >= 0}] = exp(-k^2/2)/2 + i D(k/sqrt 2)/sqrt(pi)."""
    if not abs(k) <= MAX_CF_ARG:
        raise ValueError(f"|k| must be <= {MAX_CF_ARG}, got {k}")
    return complex(0.5 * math.exp(-0.5 * k * k), dawson(k / math.sqrt(2.0)) / math.sqrt(math.pi))


def block_cf(l: int, k_abs: float, k_lin: float) -> complex:
    """E[exp(i(k_abs |Z| + k_lin Z))] for Z ~ N(0, 2**-l)."""
    s = 2.0 ** (-l / 2.0)
    return half_normal_cf(s * (k_abs + k_lin)) + half_normal_cf(s * (k_abs - k_lin))

