"""DAC transfer characteristics and static non-linearity.

Unit currents are indexed from 1 in the usual notation (block ``m`` of a
binary DAC holds units ``2**(m-1) .. 2**m - 1``). Arrays here are 0-based,
so unit ``j`` lives at index ``j - 1``.

All builders accept a batch of chips: ``currents`` may have any number of
leading axes, the last axis holding the ``n`` unit currents.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .mismatch import DacSpec, UnitCurrentVector


class Kind(str, enum.Enum):
    THERMOMETER = "thermo"
    BINARY = "binary"
    SEGMENTED = "segmented"


@dataclass(frozen=True)
class Architecture:
    kind: Kind
    segmentation: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.SEGMENTED:
            if self.segmentation is None or self.segmentation < 0:
                raise ValueError("segmented architecture needs segmentation S >= 0")
        elif self.segmentation is not None:
            raise ValueError(f"segmentation only applies to segmented DACs, not {self.kind.value}")

    @classmethod
    def thermometer(cls):
        return cls(Kind.THERMOMETER)

    @classmethod
    def binary(cls):
        return cls(Kind.BINARY)

    @classmethod
    def segmented(cls, s: int):
        return cls(Kind.SEGMENTED, s)

    def check_bits(self, bits: int) -> None:
        if self.kind is Kind.SEGMENTED and self.segmentation > bits:
            raise ValueError(f"segmentation {self.segmentation} exceeds resolution {bits}")

    def label(self) -> str:
        if self.kind is Kind.SEGMENTED:
            return f"segmented(S={self.segmentation})"
        return self.kind.value


@dataclass(frozen=True)
class TransferCurve:
    outputs: np.ndarray
    architecture: Architecture

    @property
    def n(self) -> int:
        return self.outputs.shape[-1] - 1


@dataclass(frozen=True)
class NonlinearityProfile:
    dnl: np.ndarray  # codes 1..n
    inl: np.ndarray  # codes 0..n
    inl_max: float


def bits_for(n: int) -> int:
    bits = int(n + 1).bit_length() - 1
    if n < 1 or 2**bits - 1 != n:
        raise ValueError(f"unit count {n} is not of the form 2**N - 1")
    return bits


def switching_matrix(bits: int) -> np.ndarray:
    """(n+1) x N 0/1 matrix; row k is k in binary, least-significant bit first."""
    if not 1 <= bits <= 30:
        raise ValueError(f"bits must be in [1, 30], got {bits}")
    k = np.arange(2**bits, dtype=np.int64)[:, None]
    return ((k >> np.arange(bits, dtype=np.int64)) & 1).astype(np.uint8)


def _block_sums(currents: np.ndarray, bits: int) -> np.ndarray:
    return np.stack(
        [currents[..., 2 ** (m - 1) - 1 : 2**m - 1].sum(axis=-1) for m in range(1, bits + 1)], axis=-1
    )


def _thermometer(currents: np.ndarray) -> np.ndarray:
    out = np.zeros(currents.shape[:-1] + (currents.shape[-1] + 1,))
    np.cumsum(currents, axis=-1, out=out[..., 1:])
    return out


def _binary_lsbs(currents: np.ndarray, bits: int, low: int) -> np.ndarray:
    """Binary-coded part over bits 1..low, evaluated for every code 0..n."""
    B = switching_matrix(bits)
    blocks = _block_sums(currents[..., : 2**low - 1], low) if low else None
    out = np.zeros(currents.shape[:-1] + (2**bits,))
    for m in range(low):
        out += B[:, m] * blocks[..., m, None]
    return out


def _binary(currents: np.ndarray, bits: int) -> np.ndarray:
    return _binary_lsbs(currents, bits, bits)


def _segmented(currents: np.ndarray, bits: int, s: int) -> np.ndarray:
    low = bits - s
    group = 2**low
    out = _binary_lsbs(currents, bits, low)
    # thermometer MSB groups m = 1 .. 2**s - 1 hold units m*group .. (m+1)*group - 1
    groups = currents[..., group - 1 :].reshape(currents.shape[:-1] + (2**s - 1, group)).sum(axis=-1)
    thermo = _thermometer(groups)
    codes = np.arange(2**bits)
    out += thermo[..., codes // group]
    return out


def transfer_outputs(arch: Architecture, currents: np.ndarray) -> np.ndarray:
    """I_out_k for k = 0..n over the last axis of ``currents``."""
    currents = np.asarray(currents, dtype=float)
    bits = bits_for(currents.shape[-1])
    arch.check_bits(bits)
    if arch.kind is Kind.THERMOMETER:
        return _thermometer(currents)
    if arch.kind is Kind.BINARY:
        return _binary(currents, bits)
    return _segmented(currents, bits, arch.segmentation)


def transfer(arch: Architecture, units: UnitCurrentVector) -> TransferCurve:
    return TransferCurve(transfer_outputs(arch, units.currents), arch)


def nonlinearity(curve: TransferCurve, i_lsb: float) -> NonlinearityProfile:
    if not i_lsb > 0:
        raise ValueError(f"i_lsb must be positive, got {i_lsb}")
    out = curve.outputs
    dnl = (np.diff(out) - i_lsb) / i_lsb
    inl = (out - np.arange(out.size) * i_lsb) / i_lsb
    return NonlinearityProfile(dnl=dnl, inl=inl, inl_max=float(np.max(np.abs(inl))))


def normalized_inl_max(profile: NonlinearityProfile, spec: DacSpec, i_lsb: float) -> float:
    """(I_lsb / (sigma_u sqrt(n))) * INL_max, the quantity with a limit law."""
    if spec.sigma_u <= 0:
        raise ValueError("normalized INL_max is undefined for sigma_u = 0")
    return i_lsb / (spec.sigma_u * math.sqrt(spec.unit_count)) * profile.inl_max


def centered_deviation(arch: Architecture, currents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (I_out_k - k*I_lsb, I_lsb) for a batch of chips.

    Every code k switches exactly k units on, so the deviation is the
    transfer of the mean-removed currents. Building it that way avoids the
    cancellation of ``I_out_k - k*I_lsb`` at large n.
    """
    currents = np.asarray(currents, dtype=float)
    lsb = currents.mean(axis=-1)
    dev = transfer_outputs(arch, currents - lsb[..., None])
    return dev, lsb
