import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dacinl.mismatch import DacSpec, UnitCurrentVector, sample_unit_currents
from dacinl.transfer import (
    Architecture,
    bits_for,
    centered_deviation,
    nonlinearity,
    normalized_inl_max,
    switching_matrix,
    transfer,
    transfer_outputs,
)

ARCHS = [Architecture.thermometer(), Architecture.binary(), Architecture.segmented(2)]


def _reference_binary(currents, bits):
    """Sum of the switched dyadic blocks, straight from the bit pattern."""
    out = []
    for k in range(2**bits):
        total = 0.0
        for m in range(1, bits + 1):
            if (k >> (m - 1)) & 1:
                total += sum(currents[2 ** (m - 1) - 1 : 2**m - 1])
        out.append(total)
    return np.array(out)


def _reference_segmented(currents, bits, s):
    g = 2 ** (bits - s)
    out = []
    for k in range(2**bits):
        low = k % g
        total = _reference_binary(currents[: g - 1], bits - s)[low] if bits > s else 0.0
        for m in range(1, k // g + 1):
            total += sum(currents[m * g - 1 : (m + 1) * g - 1])
        out.append(total)
    return np.array(out)


def test_switching_matrix_small():
    b = switching_matrix(2)
    assert b.tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]
    with pytest.raises(ValueError):
        switching_matrix(0)


def test_bits_for():
    assert bits_for(1023) == 10
    with pytest.raises(ValueError):
        bits_for(1000)


def test_equal_currents_give_zero_nonlinearity():
    u = sample_unit_currents(DacSpec(6, mean_current=3.0), seed=0)
    for arch in ARCHS:
        prof = nonlinearity(transfer(arch, u), u.i_lsb)
        assert np.abs(prof.inl).max() < 1e-12
        assert np.abs(prof.dnl).max() < 1e-12


def test_three_unit_example():
    u = UnitCurrentVector.from_currents([1.0, 1.1, 0.9])
    thermo = transfer(Architecture.thermometer(), u).outputs
    binary = transfer(Architecture.binary(), u).outputs
    assert np.allclose(thermo, [0.0, 1.0, 2.1, 3.0])
    assert np.allclose(binary, [0.0, 1.0, 2.0, 3.0])
    prof = nonlinearity(transfer(Architecture.thermometer(), u), u.i_lsb)
    assert prof.inl_max == pytest.approx(0.1)


@settings(max_examples=40, deadline=None)
@given(bits=st.integers(1, 6), data=st.data())
def test_matches_reference_constructions(bits, data):
    n = 2**bits - 1
    c = data.draw(arrays(float, n, elements=st.floats(0.5, 1.5)))
    s = data.draw(st.integers(0, bits))
    assert np.allclose(transfer_outputs(Architecture.thermometer(), c), np.concatenate([[0], np.cumsum(c)]))
    assert np.allclose(transfer_outputs(Architecture.binary(), c), _reference_binary(c, bits))
    assert np.allclose(transfer_outputs(Architecture.segmented(s), c), _reference_segmented(c, bits, s))


@settings(max_examples=40, deadline=None)
@given(bits=st.integers(1, 7), seed=st.integers(0, 2**32), s=st.integers(0, 7))
def test_inl_endpoints_zero_and_dnl_sums_to_inl(bits, seed, s):
    u = sample_unit_currents(DacSpec.from_relative(bits, 0.05), seed)
    for arch in [Architecture.thermometer(), Architecture.binary(), Architecture.segmented(min(s, bits))]:
        prof = nonlinearity(transfer(arch, u), u.i_lsb)
        assert abs(prof.inl[0]) < 1e-12 and abs(prof.inl[-1]) < 1e-9
        assert np.allclose(np.cumsum(prof.dnl), prof.inl[1:], atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), scale=st.floats(0.1, 10.0))
def test_normalized_statistic_is_scale_free(seed, scale):
    base = sample_unit_currents(DacSpec.from_relative(7, 0.02), seed)
    spec_a = DacSpec.from_relative(7, 0.02)
    spec_b = DacSpec.from_relative(7, 0.02, mean_current=scale)
    scaled = UnitCurrentVector.from_currents(scale * base.currents)
    for arch in ARCHS:
        a = normalized_inl_max(nonlinearity(transfer(arch, base), base.i_lsb), spec_a, base.i_lsb)
        b = normalized_inl_max(nonlinearity(transfer(arch, scaled), scaled.i_lsb), spec_b, scaled.i_lsb)
        assert a == pytest.approx(b, rel=1e-9)


def test_centered_deviation_matches_direct():
    u = sample_unit_currents(DacSpec.from_relative(9, 0.03), seed=8)
    for arch in ARCHS:
        dev, lsb = centered_deviation(arch, u.currents)
        prof = nonlinearity(transfer(arch, u), u.i_lsb)
        assert lsb == pytest.approx(u.i_lsb, rel=1e-14)
        assert np.allclose(dev / lsb, prof.inl, atol=1e-10)


def test_segmented_endpoints_n8():
    u = sample_unit_currents(DacSpec.from_relative(8, 0.05), seed=21)
    assert np.array_equal(transfer(Architecture.segmented(0), u).outputs, transfer(Architecture.binary(), u).outputs)
    a = transfer(Architecture.segmented(8), u).outputs
    b = transfer(Architecture.thermometer(), u).outputs
    assert np.max(np.abs(a - b)[1:] / b[1:]) < 1e-12


def test_architecture_validation():
    with pytest.raises(ValueError):
        Architecture("segmented")
    with pytest.raises(ValueError):
        Architecture("binary", 2)
    with pytest.raises(ValueError):
        transfer_outputs(Architecture.segmented(5), np.ones(7))
    with pytest.raises(ValueError):
        nonlinearity(transfer(Architecture.binary(), UnitCurrentVector.from_currents(np.ones(3))), 0.0)
    with pytest.raises(ValueError):
        normalized_inl_max(None, DacSpec(3), 1.0)
