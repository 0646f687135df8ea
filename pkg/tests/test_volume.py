"""
Unit tests for the exact volume helpers and the product-measure check.
"""

from fractions import Fraction

from hypothesis import given, strategies as st
import numpy as np
import pytest

from central_extension import SeifertDescriptor
from errors import DomainError
from siegel_space import SiegelPoint, random_generator_word
from symplectic_core import SymplecticMatrix, gen_N
from volume import (
    MeasureBox,
    bernoulli,
    bernoulli_recurrence_residual,
    euler_char_factors,
    euler_char_sp,
    measure_check_details,
    measure_threshold,
    product_measure_check,
    seifert_volume,
    volume_ratio,
    zeta_neg,
)

fractions = st.fractions(min_value=-100, max_value=100, max_denominator=1000)


def test_bernoulli_examples() -> None:
    assert bernoulli(2) == Fraction(1, 6)
    assert bernoulli(4) == Fraction(-1, 30)
    assert bernoulli(6) == Fraction(1, 42)
    assert bernoulli(12) == Fraction(-691, 2730)


@pytest.mark.parametrize("m", [0, 1, 3, -2])
def test_bernoulli_rejects_bad_index(m: int) -> None:
    with pytest.raises(DomainError):
        bernoulli(m)


@given(st.integers(min_value=1, max_value=40))
def test_bernoulli_recurrence_holds_exactly(m: int) -> None:
    assert bernoulli_recurrence_residual(m) == 0


def test_zeta_values() -> None:
    assert zeta_neg(1) == Fraction(-1, 12)
    assert zeta_neg(2) == Fraction(1, 120)
    assert zeta_neg(3) == Fraction(-1, 252)
    with pytest.raises(DomainError):
        zeta_neg(0)


def test_euler_characteristics() -> None:
    assert euler_char_sp(1) == Fraction(-1, 12)
    assert euler_char_sp(2) == Fraction(-1, 1440)
    assert euler_char_sp(2) == zeta_neg(1) * zeta_neg(2)
    assert euler_char_sp(3) == Fraction(1, 362880)
    assert euler_char_factors(2) == [Fraction(-1, 12), Fraction(1, 120)]
    with pytest.raises(DomainError):
        euler_char_sp(0)


def test_volume_examples() -> None:
    assert seifert_volume(SeifertDescriptor(Fraction(1), Fraction(-4))).volume == 4
    result = seifert_volume(SeifertDescriptor(Fraction(3, 2), Fraction(-2)))
    assert result.volume == 3
    assert result.signed_volume == -3
    assert result.sign_convention_applied
    psp = seifert_volume(SeifertDescriptor.from_psp(euler_char_sp(2)))
    assert psp.volume == Fraction(1, 1440)


@given(
    covolume=st.fractions(min_value=Fraction(1, 1000), max_value=100, max_denominator=1000),
    base=fractions,
    scale=st.integers(min_value=1, max_value=50),
)
def test_volume_is_linear_in_both_inputs(covolume: Fraction, base: Fraction, scale: int) -> None:
    volume = seifert_volume(SeifertDescriptor(covolume, base)).volume
    assert volume == abs(covolume * base)
    assert seifert_volume(SeifertDescriptor(scale * covolume, base)).volume == scale * volume
    assert seifert_volume(SeifertDescriptor(covolume, scale * base)).volume == scale * volume


def test_volume_ratio() -> None:
    first = SeifertDescriptor.from_psp(euler_char_sp(2))
    second = SeifertDescriptor.from_psp(euler_char_sp(1))
    assert volume_ratio(first, second) == Fraction(1, 120)
    with pytest.raises(DomainError):
        volume_ratio(first, SeifertDescriptor(Fraction(1), Fraction(0)))


def test_measure_box_validation() -> None:
    with pytest.raises(DomainError):
        MeasureBox(np.zeros(2), np.zeros(2), 0.0, 1.0)
    with pytest.raises(DomainError):
        MeasureBox(np.zeros(2), np.ones(2), 1.0, 1.0)
    with pytest.raises(DomainError):
        MeasureBox(np.zeros(5), np.ones(5), 0.0, 1.0)
    box = MeasureBox.around(SiegelPoint.basepoint(2), 0.1, (0.0, 2.0))
    assert box.n == 2
    assert box.volume == pytest.approx(0.2**6 * 2.0)


def test_measure_threshold() -> None:
    assert measure_threshold(10000) == pytest.approx(0.031)


def test_measure_check_on_identity_and_shear() -> None:
    box = MeasureBox.around(SiegelPoint.basepoint(2), 0.2)
    for M in (SymplecticMatrix.identity(2), gen_N(np.array([[0.3, 0.1], [0.1, -0.2]]))):
        details = measure_check_details(M, 0.5, box, 4000, np.random.default_rng(7))
        assert details.residual < details.threshold
        assert details.fiber_shift_residual < 1e-8
        assert details.inside_fraction == 1.0


def test_strata_per_axis_keeps_two_samples_per_cell() -> None:
    box = MeasureBox.around(SiegelPoint.basepoint(2), 0.2)
    assert box.strata_per_axis(4000) == 8
    assert box.strata_per_axis(78) == 3
    assert box.strata_per_axis(1) == 1
    assert MeasureBox.around(SiegelPoint.basepoint(1), 0.2).strata_per_axis(4000) == 512


def test_stratified_samples_land_in_their_cells() -> None:
    box = MeasureBox.around(SiegelPoint.basepoint(2), 0.2)
    cells = np.arange(54) % 27
    coords = box.sample_cells(np.random.default_rng(2), cells, 3)
    assert np.all(coords >= box.low) and np.all(coords <= box.high)
    fraction = (coords[:, 3:] - box.low[3:]) / (box.high[3:] - box.low[3:])
    expected = (cells[:, None] // 3 ** np.arange(3)) % 3
    assert np.array_equal(np.floor(3 * fraction).astype(int), expected)


def test_stratified_estimate_has_small_standard_error() -> None:
    box = MeasureBox.around(SiegelPoint.basepoint(2), 0.2)
    M = random_generator_word(2, 3, np.random.default_rng(4))
    details = measure_check_details(M, 0.0, box, 4000, np.random.default_rng(8))
    assert details.strata == 8
    assert 0.0 < details.relative_standard_error * np.sqrt(4000) < 1.0
    assert details.residual < details.threshold
    with pytest.raises(DomainError, match="strata"):
        measure_check_details(M, 0.0, box, 100, np.random.default_rng(8), strata=5)


def test_measure_check_with_finite_difference_jacobian() -> None:
    box = MeasureBox.around(SiegelPoint(np.array([[1.2j]])), 0.1)
    M = gen_N(np.array([[0.5]]))
    residual = product_measure_check(
        1, M, -1.0, box, 4000, np.random.default_rng(11), jacobian="finite-difference"
    )
    assert residual < measure_threshold(4000)


def test_measure_check_rejects_mismatched_inputs() -> None:
    box = MeasureBox.around(SiegelPoint.basepoint(1), 0.1)
    rng = np.random.default_rng(3)
    with pytest.raises(DomainError):
        product_measure_check(2, SymplecticMatrix.identity(2), 0.0, box, 100, rng)
    with pytest.raises(DomainError):
        measure_check_details(SymplecticMatrix.identity(2), 0.0, box, 100, rng)
    outside = MeasureBox(np.array([-2.0, -2.0]), np.array([-1.0, -1.0]), 0.0, 1.0)
    with pytest.raises(DomainError):
        measure_check_details(SymplecticMatrix.identity(1), 0.0, outside, 100, rng)
