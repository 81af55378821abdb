"""Unit-current mismatch model.

Every unit current is ``I_u = mean_current + eps`` with ``eps`` i.i.d.
``Normal(0, sigma_u**2)``. Random draws come from a counter-based generator
(Philox) so that the value of unit ``j`` of trial ``t`` depends only on
``(seed, t, j)``; this makes any partitioning of trials across workers
produce bit-identical results.

Normals are produced by the inverse-CDF transform of 52-bit uniforms, one
Philox output word per unit. This is slower than a ziggurat but keeps the
unit -> counter mapping fixed, which is what allows random access.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

MAX_SEED = 2**64 - 1
_WORDS_PER_BLOCK = 4


@dataclass(frozen=True)
class DacSpec:
    """Design parameters of a current-steering DAC."""

    bits: int
    mean_current: float = 1.0
    sigma_u: float = 0.0

    def __post_init__(self):
        if not isinstance(self.bits, (int, np.integer)) or self.bits < 1:
            raise ValueError(f"bits must be a positive integer, got {self.bits!r}")
        if self.bits > 30:
            raise ValueError("bits > 30 is not supported")
        if not math.isfinite(self.mean_current) or self.mean_current <= 0:
            raise ValueError("mean_current must be finite and > 0")
        if not math.isfinite(self.sigma_u) or self.sigma_u < 0:
            raise ValueError("sigma_u must be finite and >= 0")

    @classmethod
    def from_relative(cls, bits: int, relative_matching: float, mean_current: float = 1.0) -> "DacSpec":
        return cls(bits=bits, mean_current=mean_current, sigma_u=relative_matching * mean_current)

    @property
    def unit_count(self) -> int:
        return 2**self.bits - 1

    @property
    def relative_matching(self) -> float:
        return self.sigma_u / self.mean_current


@dataclass(frozen=True)
class UnitCurrentVector:
    currents: np.ndarray
    i_lsb: float
    full_scale: float

    @classmethod
    def from_currents(cls, currents) -> "UnitCurrentVector":
        currents = np.asarray(currents, dtype=float)
        full_scale = float(np.sum(currents))
        return cls(currents=currents, i_lsb=full_scale / currents.size, full_scale=full_scale)

    @property
    def n(self) -> int:
        return self.currents.size


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if seed < 0 or seed > MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed


def uniform_words_to_normal(words: np.ndarray) -> np.ndarray:
    """Map raw uint64 words to standard normals.

    Uses the top 52 bits, u = (w + 1/2) / 2**52, so u lies in
    [2**-53, 1 - 2**-53]; with 53 bits the largest word rounds to u = 1.
    """
    u = ((words >> np.uint64(12)).astype(np.float64) + 0.5) * (1.0 / 4503599627370496.0)
    return ndtri(u)


def unit_normals(seed: int, trial: int, count: int, start: int = 0, stream: int = 0) -> np.ndarray:
    """Standard normals for units ``start .. start+count-1`` of one trial.

    ``stream`` separates unrelated uses of the same (seed, trial) pair.
    """
    seed = _check_seed(seed)
    if trial < 0 or stream < 0 or start < 0 or count < 0:
        raise ValueError("trial, stream, start and count must be non-negative")
    bitgen = np.random.Philox(key=seed, counter=[0, trial, stream, 0])
    block, skip = divmod(start, _WORDS_PER_BLOCK)
    if block:
        bitgen.advance(block)
    words = bitgen.random_raw(count + skip)[skip:]
    return uniform_words_to_normal(words)


def trial_normals(seed: int, trials: range, count: int, stream: int = 0) -> np.ndarray:
    """Stack ``unit_normals`` for a contiguous range of trials -> (len(trials), count)."""
    out = np.empty((len(trials), count))
    for row, t in enumerate(trials):
        out[row] = unit_normals(seed, t, count, stream=stream)
    return out


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """A Generator on the (seed, trial, stream) substream, for samplers taking an rng."""
    seed = _check_seed(seed)
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, trial, stream, 0]))


def sample_unit_currents(spec: DacSpec, seed: int, trial: int = 0) -> UnitCurrentVector:
    """Draw one chip's unit currents."""
    n = spec.unit_count
    if spec.sigma_u == 0:
        # exact even when n * mean_current is not representable by summation
        return UnitCurrentVector(np.full(n, spec.mean_current), spec.mean_current, n * spec.mean_current)
    eps = unit_normals(seed, trial, n)
    return UnitCurrentVector.from_currents(spec.mean_current + spec.sigma_u * eps)


def i_lsb(currents) -> float:
    currents = np.asarray(currents, dtype=float)
    if currents.ndim != 1 or currents.size == 0:
        raise ValueError("currents must be a non-empty 1-d array")
    if not np.all(np.isfinite(currents)):
        raise ValueError("currents must be finite")
    return float(np.sum(currents)) / currents.size
