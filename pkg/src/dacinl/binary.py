"""Limit law of the binary-coded INL_max.

The normalized INL_max of a binary DAC converges to

    M = 1/2 * sum_{l>=1} |N_l|,    N_l = B(2**-(l-1)) - B(2**-l)

for a Brownian bridge ``B``. Writing the bridge at dyadic points through
i.i.d. standard normals ``Z_j`` gives

    N_l = sum_{j<l} 2**(-(j+1)/2 - (l-j)) Z_j  -  2**(-(l+1)/2) Z_l

with ``Var N_l = 2**-l - 4**-l`` and ``Cov(N_l, N_k) = -2**-(l+k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .mismatch import DacSpec
from .stats import wilson_interval
from .thermo import scaled_threshold

DEFAULT_DEPTH = 40
MAX_COV_ORDER = 30
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def block_variance(l: int) -> float:
    if l < 1:
        raise ValueError(f"block index must be >= 1, got {l}")
    return 2.0**-l - 2.0 ** (-2 * l)


def rho(l: int, k: int) -> float:
    """Correlation of the block increments N_l and N_k (l != k)."""
    if l == k:
        raise ValueError("rho is defined for distinct blocks only")
    return -(2.0 ** -(l + k)) / math.sqrt(block_variance(l) * block_variance(k))


def abs_product_mean(r: float) -> float:
    """E|Y1||Y2| for standard bivariate normals with correlation ``r``."""
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {r}")
    return 2.0 / math.pi * (math.sqrt(1.0 - r * r) + r * math.asin(r))


def mean_tail_bound(depth: int) -> float:
    """Upper bound on sum_{l>depth} sqrt(v_l) / sqrt(2 pi)."""
    return 2.0 ** (-depth / 2.0) / ((math.sqrt(2.0) - 1.0) * _SQRT_2PI)


def mean_M(tol: float = 1e-12) -> float:
    if not tol > 0:
        raise ValueError("tol must be positive")
    total = 0.0
    l = 0
    while True:
        l += 1
        total += math.sqrt(block_variance(l))
        if mean_tail_bound(l) < tol or l >= 1000:
            break
    return total / _SQRT_2PI


def mean_M_partial(depth: int) -> float:
    """E[M^(depth)] = E[1/2 sum_{l<=depth} |N_l|]."""
    return sum(math.sqrt(block_variance(l)) for l in range(1, depth + 1)) / _SQRT_2PI


def mean_M_finite(bits: int) -> float:
    """Exact mean of the normalized binary INL_max at resolution ``bits``.

    Block m spans a bridge increment of length 2**(m-1)/n, so the mean is a
    finite sum; it differs from ``mean_M`` by the missing tail l > bits.
    """
    n = 2**bits - 1
    d = np.array([2.0 ** (m - 1) / n for m in range(1, bits + 1)])
    return float(np.sum(np.sqrt(d * (1.0 - d)))) / _SQRT_2PI


def var_M(depth: int = 60) -> float:
    """Variance of M; the off-diagonal double sum is truncated at ``depth``."""
    if depth < 2:
        raise ValueError("depth must be >= 2")
    v = [block_variance(l) for l in range(1, depth + 1)]
    off = 0.0
    for l in range(1, depth + 1):
        for k in range(l + 1, depth + 1):
            r = rho(l, k)
            # sqrt(1-r^2) - 1 written without cancellation for tiny r
            g = -r * r / (1.0 + math.sqrt(1.0 - r * r)) + r * math.asin(r)
            off += math.sqrt(v[l - 1] * v[k - 1]) * g
    return off / math.pi + (1.0 - 2.0 / math.pi) / 6.0


def block_increments(z: np.ndarray) -> np.ndarray:
    """N_1..N_L from standard normals Z_1..Z_L along the last axis, in O(L).

    Uses the prefix recurrence T_{l+1} = (T_l + 2**-((l+1)/2) Z_l) / 2 with
    T_1 = 0, so that N_l = T_l - 2**-((l+1)/2) Z_l.
    """
    z = np.asarray(z, dtype=float)
    depth = z.shape[-1]
    out = np.empty_like(z)
    t = np.zeros(z.shape[:-1])
    for l in range(1, depth + 1):
        w = 2.0 ** (-(l + 1) / 2.0) * z[..., l - 1]
        out[..., l - 1] = t - w
        t = 0.5 * (t + w)
    return out


def M_from_normals(z: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(block_increments(z)).sum(axis=-1)


def sample_M(depth: int, rng: np.random.Generator, size: int | None = None):
    """Draw M truncated to ``depth`` blocks (one value, or an array of ``size``)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    shape = (depth,) if size is None else (size, depth)
    m = M_from_normals(rng.standard_normal(shape))
    return float(m) if size is None else m


@dataclass(frozen=True)
class DyadicBridge:
    """Brownian bridge values at t = 2**-l, l = 1..depth (``values[l-1]``)."""

    values: np.ndarray

    @property
    def depth(self) -> int:
        return self.values.shape[-1]

    def increments(self) -> np.ndarray:
        """B(2**-(l-1)) - B(2**-l) with B(1) = 0."""
        prev = np.concatenate([np.zeros(self.values.shape[:-1] + (1,)), self.values[..., :-1]], axis=-1)
        return prev - self.values

    def half_abs_sum(self) -> np.ndarray:
        return 0.5 * np.abs(self.increments()).sum(axis=-1)


def dyadic_bridge(depth: int, rng: np.random.Generator, size: int | None = None) -> DyadicBridge:
    """Bridge at dyadic points by repeated midpoint conditioning.

    Given B(2t) (and B(0) = 0), B(t) is normal with mean B(2t)/2 and
    variance t/2; starting from B(1) = 0 this gives B(1/2) = Z_1/2.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    shape = (depth,) if size is None else (size, depth)
    z = rng.standard_normal(shape)
    values = np.empty(shape)
    prev = np.zeros(shape[:-1])
    for l in range(1, depth + 1):
        prev = 0.5 * prev + 2.0 ** (-(l + 1) / 2.0) * z[..., l - 1]
        values[..., l - 1] = prev
    return DyadicBridge(values)


def _check_order(m: int) -> None:
    if not 1 <= m <= MAX_COV_ORDER:
        raise ValueError(f"order m must be in [1, {MAX_COV_ORDER}], got {m}")


def loading_matrix(m: int) -> np.ndarray:
    """Lower-triangular A with (N_1..N_m) = A @ (Z_1..Z_m)."""
    _check_order(m)
    a = np.zeros((m, m))
    for l in range(1, m + 1):
        for j in range(1, l):
            a[l - 1, j - 1] = 2.0 ** (-(j + 1) / 2.0 - (l - j))
        a[l - 1, l - 1] = -(2.0 ** (-(l + 1) / 2.0))
    return a


def cov_matrix(m: int) -> np.ndarray:
    _check_order(m)
    idx = np.arange(1, m + 1)
    cov = -(2.0 ** -(idx[:, None] + idx[None, :]))
    np.fill_diagonal(cov, 2.0**-idx - 2.0 ** (-2 * idx))
    return cov


def det_cov_closed(m: int) -> float:
    _check_order(m)
    return 2.0 ** (-m * (m + 3) / 2.0)


def det_cov(m: int) -> float:
    """Closed-form determinant 2**(-m(m+3)/2), checked numerically for m <= 10."""
    det = det_cov_closed(m)
    if m <= 10:
        numeric = np.linalg.det(cov_matrix(m))
        if abs(numeric - det) > 1e-10 * det:
            raise ArithmeticError(f"determinant mismatch at m={m}: {numeric} vs {det}")
    return det


def inv_cov(m: int) -> np.ndarray:
    """Inverse covariance via the triangular loading matrix: A^-T A^-1."""
    a_inv = solve_triangular(loading_matrix(m), np.eye(m), lower=True)
    return a_inv.T @ a_inv


def yield_binary(
    inl_spec_lsb: float, spec: DacSpec, samples: int, depth: int = DEFAULT_DEPTH, seed: int = 0
) -> tuple[float, float, float]:
    """P(M <= scaled spec) from ``samples`` draws of M -> (yield, ci_low, ci_high)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = scaled_threshold(inl_spec_lsb, spec)
    rng = np.random.default_rng(seed)
    hits = 0
    for start in range(0, samples, 100_000):
        size = min(100_000, samples - start)
        hits += int(np.count_nonzero(sample_M(depth, rng, size) <= x))
    lo, hi = wilson_interval(hits, samples)
    return hits / samples, lo, hi
