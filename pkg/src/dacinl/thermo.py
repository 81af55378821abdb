"""Limit law of the thermometer-coded INL_max.

The normalized INL_max of a thermometer DAC converges to
``X = max_t |B_t|`` for a Brownian bridge ``B``, whose distribution is
Kolmogorov's:

    P(X <= x) = 1 + 2 * sum_{k>=1} (-1)**k * exp(-2 k**2 x**2)
"""

from __future__ import annotations

import math

from .mismatch import DacSpec

SERIES_FLOOR = 1e-16
SMALL_X = 0.05
BRACKET = (1e-6, 10.0)
MAX_BISECTIONS = 200


def kolmogorov_cdf(x: float, tol: float = SERIES_FLOOR) -> float:
    """P(X <= x) from the alternating theta series.

    Terms are added until the next one falls below ``tol``. Below
    ``SMALL_X`` the series cancels catastrophically and the true value is
    under 1e-300, so 0 is returned.
    """
    if x < 0 or math.isnan(x):
        raise ValueError(f"x must be non-negative, got {x}")
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    if x < SMALL_X:
        return 0.0
    total = 0.0
    sign = -1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        if term < tol:
            break
        total += sign * term
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 1.0 + 2.0 * total))


def kolmogorov_sf(x: float, tol: float = SERIES_FLOOR) -> float:
    """P(X > x), summed directly so that large-x tails keep relative precision."""
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x < SMALL_X:
        return 1.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        if term == 0.0 or (term < tol * total):
            break
        total += sign * term
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def mean_X() -> float:
    return math.sqrt(2.0 * math.pi) / 2.0 * math.log(2.0)


def var_X() -> float:
    return math.pi**2 / 12.0 - math.pi / 2.0 * math.log(2.0) ** 2


def quantile_X(p: float, tol: float = 1e-12) -> float:
    """Inverse of ``kolmogorov_cdf`` by bisection on [1e-6, 10]."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    lo, hi = BRACKET
    mid = 0.5 * (lo + hi)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        c = kolmogorov_cdf(mid)
        if c == p or hi - lo <= 4e-16 * hi:
            break
        if c < p:
            lo = mid
        else:
            hi = mid
    if abs(kolmogorov_cdf(mid) - p) >= tol:
        raise ArithmeticError(f"bisection did not reach |CDF - p| < {tol} for p={p}")
    return mid


def scaled_threshold(inl_spec_lsb: float, spec: DacSpec) -> float:
    """INL spec (LSB) on the scale of the limit law: spec * I_u / (sigma_u sqrt(n))."""
    if spec.sigma_u <= 0:
        raise ValueError("yield in the limit law needs sigma_u > 0")
    return inl_spec_lsb * spec.mean_current / (spec.sigma_u * math.sqrt(spec.unit_count))


def yield_thermometer(inl_spec_lsb: float, spec: DacSpec) -> float:
    """Limit approximation of P(INL_max <= inl_spec_lsb) for a thermometer DAC."""
    if not inl_spec_lsb >= 0:
        raise ValueError("INL specification must be non-negative")
    x = scaled_threshold(inl_spec_lsb, spec)
    if math.isinf(x):
        return 1.0
    return kolmogorov_cdf(x)
