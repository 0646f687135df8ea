"""
Unit tests for the universal cover helpers.

Purpose:
    Phase tracking, the canonical path, lifting and the cover product, the
    center lattice and the scalar/special-unitary factorization.
"""

from fractions import Fraction
import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from errors import InvariantViolation, NumericError, ShapeError
from symplectic_core import (
    SymplecticMatrix,
    UnitaryMatrix,
    circle_map,
    embed_unitary,
    gen_D,
    gen_N,
    is_symplectic,
    random_special_unitary,
    random_symplectic,
    random_unitary,
)
from universal_cover import (
    CanonicalPath,
    CenterElement,
    CoverElement,
    canonical_path,
    center_elements,
    cover_inverse,
    cover_mul,
    factor_unitary_lift,
    lift,
    multiply_central,
    random_cover_element,
    scalar_lift,
    su_lift,
    track_phase,
    unitary_factorization,
    winding_cocycle,
)


def _rotation(turns: float, n: int = 1) -> SymplecticMatrix:
    u = np.eye(n, dtype=complex)
    u[0, 0] = np.exp(2j * math.pi * turns)
    return embed_unitary(u)


def test_track_phase_unwraps_fast_winding() -> None:
    assert track_phase(lambda t: np.exp(2j * math.pi * 3 * t)) == pytest.approx(6 * math.pi)
    assert track_phase(lambda t: np.exp(-2j * math.pi * 10 * t)) == pytest.approx(-20 * math.pi)


def test_track_phase_gives_up_past_subdivision_limit() -> None:
    with pytest.raises(NumericError):
        track_phase(lambda t: np.exp(2j * math.pi * 10 * t), max_steps=16)


def test_canonical_path_endpoints_and_symplecticity(rng: np.random.Generator) -> None:
    M = random_symplectic(2, rng)
    assert canonical_path(M, 0.0).allclose(SymplecticMatrix.identity(2), 0.0)
    assert canonical_path(M, 1.0).allclose(M, 0.0)
    for t in np.linspace(0.0, 1.0, 11):
        assert is_symplectic(canonical_path(M, float(t)), 1e-8)
    with pytest.raises(ShapeError):
        canonical_path(M, 1.5)


def test_canonical_path_of_positive_matrix_keeps_circle_map(rng: np.random.Generator) -> None:
    a = rng.uniform(-0.5, 0.5, size=(2, 2))
    p = gen_D(np.eye(2) + a @ a.T)
    path = CanonicalPath(p)
    assert path.unitary_turns == pytest.approx(0.0, abs=1e-12)
    for t in (0.25, 0.5, 0.75):
        assert circle_map(path.at(t)) == pytest.approx(1.0, abs=1e-10)


def test_canonical_path_through_minus_identity() -> None:
    path = CanonicalPath(-np.eye(4))
    assert abs(path.unitary_turns) == pytest.approx(1.0)
    assert np.allclose(path.at(0.5) @ path.at(0.5), -np.eye(4), atol=1e-12)


def test_lift_examples() -> None:
    assert lift(np.eye(4)).allclose(CoverElement.identity(2), 0.0)
    assert lift(_rotation(0.25, 2)).w == pytest.approx(0.25)
    assert lift(embed_unitary(-np.eye(2, dtype=complex))).w == pytest.approx(0.0, abs=1e-12)
    assert lift(_rotation(0.5)).w == pytest.approx(0.5)


def test_cover_invariant_is_checked() -> None:
    with pytest.raises(InvariantViolation):
        CoverElement(SymplecticMatrix.identity(2), 0.5).checked()
    assert CoverElement(SymplecticMatrix.identity(2), 3.0).checked().w == 3.0


def test_cover_mul_identity_is_exact(rng: np.random.Generator) -> None:
    g = random_cover_element(2, rng, sheets=3)
    left = cover_mul(CoverElement.identity(2), g)
    right = cover_mul(g, CoverElement.identity(2))
    assert left.allclose(g, 0.0) and right.allclose(g, 0.0)


def test_cover_mul_accumulates_winding_past_half_turn() -> None:
    g = lift(_rotation(0.4))
    product = cover_mul(g, g)
    assert product.w == pytest.approx(0.8)
    assert product.invariant_residual() < 1e-10


def test_cover_inverse_of_rotation() -> None:
    theta = 1.1
    g = lift(_rotation(theta / (2 * math.pi), 2))
    inverse = cover_inverse(g)
    assert inverse.w == pytest.approx(-theta / (2 * math.pi))
    assert inverse.matrix.allclose(g.matrix.inverse())


def test_cover_inverse_round_trip(rng: np.random.Generator) -> None:
    for n in (1, 2, 3):
        g = random_cover_element(n, rng, sheets=2)
        product = cover_mul(g, cover_inverse(g))
        assert abs(product.w) < 1e-8
        assert product.matrix.allclose(SymplecticMatrix.identity(n), 1e-10)


def test_cover_product_keeps_invariant_and_associates(rng: np.random.Generator) -> None:
    for n in (2, 3):
        for _ in range(5):
            g1, g2, g3 = (random_cover_element(n, rng) for _ in range(3))
            left = cover_mul(cover_mul(g1, g2), g3)
            right = cover_mul(g1, cover_mul(g2, g3))
            assert abs(left.w - right.w) < 1e-7
            assert left.invariant_residual() < 1e-8


def test_cocycle_normalization(rng: np.random.Generator) -> None:
    M = random_symplectic(2, rng)
    assert winding_cocycle(M, np.eye(4)) == 0.0
    assert winding_cocycle(np.eye(4), M) == 0.0
    assert winding_cocycle(M, -np.eye(4)) == pytest.approx(0.0, abs=1e-10)


def test_cocycle_of_unitaries_vanishes(rng: np.random.Generator) -> None:
    U, V = random_unitary(2, rng), random_unitary(2, rng)
    assert winding_cocycle(embed_unitary(U), embed_unitary(V)) == pytest.approx(0.0, abs=1e-9)


def test_center_relations() -> None:
    half = CenterElement(3, -1, Fraction(1, 2))
    assert half * half == CenterElement(3, 1, Fraction(1))
    torsion = CenterElement(2, -1, Fraction(0))
    assert torsion * torsion == CenterElement(2, 1, Fraction(0))
    tracked = cover_mul(half.as_cover(), half.as_cover())
    assert tracked.w == pytest.approx(1.0, abs=1e-10)
    assert tracked.matrix.allclose(SymplecticMatrix.identity(3), 1e-12)


def test_center_element_parity_rules() -> None:
    with pytest.raises(InvariantViolation):
        CenterElement(3, 1, Fraction(1, 2))
    with pytest.raises(InvariantViolation):
        CenterElement(2, -1, Fraction(1, 2))
    with pytest.raises(InvariantViolation):
        CenterElement(2, 1, Fraction(1, 3))
    with pytest.raises(InvariantViolation):
        CenterElement(2, 0, Fraction(0))


def test_center_enumeration_counts() -> None:
    odd = center_elements(3, (-1.0, 1.0))
    assert [(z.sign, z.k) for z in odd] == [
        (1, Fraction(-1)),
        (-1, Fraction(-1, 2)),
        (1, Fraction(0)),
        (-1, Fraction(1, 2)),
        (1, Fraction(1)),
    ]
    assert len(center_elements(2, (-1.0, 1.0))) == 6


def test_center_is_central(rng: np.random.Generator) -> None:
    for n in (1, 2, 3):
        g = random_cover_element(n, rng)
        for z in center_elements(n, (-1.0, 1.0)):
            exact = multiply_central(g, z)
            assert abs(cover_mul(z.as_cover(), g).w - exact.w) < 1e-8
            assert abs(cover_mul(g, z.as_cover()).w - exact.w) < 1e-8


@given(
    n=st.integers(min_value=1, max_value=6),
    a=st.integers(min_value=-20, max_value=20),
    b=st.integers(min_value=-20, max_value=20),
    flip=st.booleans(),
)
def test_center_arithmetic_is_exact(n: int, a: int, b: int, flip: bool) -> None:
    def element(twice_k: int) -> CenterElement:
        if n % 2:
            return CenterElement(n, -1 if twice_k % 2 else 1, Fraction(twice_k, 2))
        return CenterElement(n, -1 if flip else 1, Fraction(twice_k // 2))

    z1, z2 = element(a), element(b)
    product = z1 * z2
    assert product.k == z1.k + z2.k
    assert product.sign == z1.sign * z2.sign
    assert z1 * z1.inverse() == CenterElement(n, 1, Fraction(0))
    assert z1**3 == z1 * z1 * z1


def test_scalar_lift_examples() -> None:
    for n in (1, 2, 3):
        full = scalar_lift(2 * math.pi, n)
        assert full.w == pytest.approx(n)
        assert full.matrix.allclose(SymplecticMatrix.identity(n), 1e-12)
    half = scalar_lift(math.pi, 2)
    assert half.w == pytest.approx(1.0)
    assert half.matrix.allclose(-SymplecticMatrix.identity(2), 1e-12)
    assert scalar_lift(0.0, 2).allclose(CoverElement.identity(2), 0.0)


def test_scalar_lift_is_a_homomorphism() -> None:
    for a, b in ((0.3, 0.4), (2.5, 2.9), (-1.0, 4.0)):
        combined = cover_mul(scalar_lift(a, 2), scalar_lift(b, 2))
        assert combined.w == pytest.approx(scalar_lift(a + b, 2).w, abs=1e-9)


def test_unitary_lift_factorization_round_trip(rng: np.random.Generator) -> None:
    for n in (2, 3):
        S = random_special_unitary(n, rng)
        g = cover_mul(scalar_lift(1.3, n), su_lift(S))
        a, s_back = factor_unitary_lift(g)
        assert a == pytest.approx(1.3)
        assert s_back.allclose(S, 1e-10)


def test_unitary_factorization_range(rng: np.random.Generator) -> None:
    for n in (1, 2, 3):
        U = random_unitary(n, rng)
        a, S = unitary_factorization(U)
        assert 0.0 <= a < 2 * math.pi / n
        assert S.det() == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(np.exp(1j * a) * S.entries, U.entries, atol=1e-12)


def test_su_lift_rejects_non_special() -> None:
    with pytest.raises(InvariantViolation):
        su_lift(UnitaryMatrix(np.diag([1j, 1.0])))


def test_factor_unitary_lift_rejects_noncompact() -> None:
    with pytest.raises(InvariantViolation):
        factor_unitary_lift(lift(gen_N(np.eye(2))))
