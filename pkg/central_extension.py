"""
Central extension helpers for SiegelKit.

Purpose:
    The group G x_{Z(G)} HR/H in normal form, its action on the model space
    X = h_n x R, the exact-sequence map eta onto PSp(2n,R), the bundle
    projection nu and the Seifert-like descriptors fed to the volume formula.

Conventions:
    - Fiber units are normalized so that the generator of iota(Z(G)) has
      length 1. The unit is read off the enumerated center, never hard-coded.
    - The fiber turns against the winding coordinate:
      iota(z) = -exponent * k(z) / unit.
    - A ModelPoint's fiber coordinate is minus the lifted automorphy phase,
      so the identity of the cover sits over (iI, 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import logging
import math

import numpy as np

from errors import DomainError, InvariantViolation, ShapeError
from siegel_space import DEFAULT_TAU_ACT, SiegelPoint, mobius, transitivity_witness
from symplectic_core import (
    DEFAULT_TAU_SYM,
    MatrixLike,
    RealArray,
    SymplecticMatrix,
    UnitaryMatrix,
    as_matrix_array,
    embed_unitary,
    split_blocks,
)
from universal_cover import (
    DEFAULT_TAU_COV,
    TWO_PI,
    CanonicalPath,
    CenterElement,
    CoverElement,
    center_elements,
    cover_inverse,
    cover_mul,
    lift,
    multiply_central,
    scalar_lift,
    su_lift,
    track_phase,
)

logger = logging.getLogger(__name__)

DEFAULT_EXPONENT = 1
CENTER_WINDOW = (-2.0, 2.0)
SIGN_TOL = 1e-8


@dataclass(frozen=True)
class FiberLattice:
    """iota(Z(G)) inside R, in raw turns, plus its normalized generator."""

    n: int
    exponent: int
    unit: Fraction
    generator: CenterElement
    index: int

    def iota(self, z: CenterElement) -> Fraction:
        return -self.exponent * z.k / self.unit


def _scalar_center_shift(n: int) -> Fraction:
    """Lift index of scalar_lift(pi), which generates R meet Z(G)."""
    element = scalar_lift(math.pi, n)
    return Fraction(element.w).limit_denominator(2)


@lru_cache(maxsize=None)
def fiber_lattice(n: int, exponent: int = DEFAULT_EXPONENT) -> FiberLattice:
    if exponent == 0:
        raise DomainError("fiber exponent must be nonzero")
    elements = center_elements(n, CENTER_WINDOW)
    raw = {z: -exponent * z.k for z in elements}
    unit = min(abs(v) for v in raw.values() if v != 0)
    candidates = sorted((z for z, v in raw.items() if v == unit), key=lambda z: -z.sign)
    shift = _scalar_center_shift(n)
    index = sum(1 for z in center_elements(n, (0.0, float(shift))) if z.k < shift)
    lattice = FiberLattice(n, exponent, Fraction(unit), candidates[0], index)
    logger.debug(
        "fiber lattice n=%d exponent=%d unit=%s generator=(%+d, %s) index=%d",
        n,
        exponent,
        lattice.unit,
        lattice.generator.sign,
        lattice.generator.k,
        index,
    )
    return lattice


def iota(z: CenterElement, exponent: int = DEFAULT_EXPONENT) -> float:
    """R-coordinate of a center element modulo H, in normalized units."""
    return float(fiber_lattice(z.n, exponent).iota(z))


def _leading_sign(m: RealArray) -> int:
    threshold = SIGN_TOL * float(np.max(np.abs(m)))
    for value in m.ravel():
        if abs(value) > threshold:
            return 1 if value > 0 else -1
    return 1


@dataclass(frozen=True, eq=False)
class ExtElement:
    """Normal-form pair (g, r) with r in [0, 1). Build through ext_make."""

    g: CoverElement
    r: float
    exponent: int = DEFAULT_EXPONENT

    def __post_init__(self) -> None:
        if not 0.0 <= self.r < 1.0:
            raise InvariantViolation(f"ExtElement is not reduced (r = {self.r})")

    @property
    def n(self) -> int:
        return self.g.n

    def is_close(self, other: ExtElement, tol: float = DEFAULT_TAU_COV) -> bool:
        """Equality modulo the center identification, within tol."""
        if other.n != self.n or other.exponent != self.exponent:
            return False
        lattice = fiber_lattice(self.n, self.exponent)
        shift = round(self.r - other.r)
        mine = multiply_central(self.g, lattice.generator**shift)
        if abs(self.r - shift - other.r) > tol or abs(mine.w - other.g.w) > tol:
            return False
        a, b = mine.matrix.entries, other.g.matrix.entries
        if np.max(np.abs(a - b)) <= tol:
            return True
        return self.n % 2 == 0 and bool(np.max(np.abs(a + b)) <= tol)


@dataclass(frozen=True, eq=False)
class ModelPoint:
    Z: SiegelPoint
    t: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def basepoint(cls, n: int) -> ModelPoint:
        return cls(SiegelPoint.basepoint(n), 0.0)

    @property
    def n(self) -> int:
        return self.Z.n

    def allclose(self, other: ModelPoint, tol: float = DEFAULT_TAU_ACT) -> bool:
        return self.Z.allclose(other.Z, tol) and abs(self.t - other.t) <= tol


@dataclass(frozen=True, eq=False)
class ProjectiveSymplectic:
    """Element of PSp(2n,R), stored with the leading nonzero entry positive."""

    matrix: SymplecticMatrix

    @classmethod
    def of(cls, M: MatrixLike) -> ProjectiveSymplectic:
        m = as_matrix_array(M)
        return cls(SymplecticMatrix(_leading_sign(m) * m))

    def __matmul__(self, other: ProjectiveSymplectic) -> ProjectiveSymplectic:
        return ProjectiveSymplectic.of(self.matrix @ other.matrix)

    def allclose(self, other: ProjectiveSymplectic, tol: float = DEFAULT_TAU_SYM) -> bool:
        a, b = self.matrix.entries, other.matrix.entries
        if a.shape != b.shape:
            return False
        return bool(min(np.max(np.abs(a - b)), np.max(np.abs(a + b))) <= tol)

    def is_identity(self, tol: float = DEFAULT_TAU_SYM) -> bool:
        return self.allclose(ProjectiveSymplectic.of(np.eye(self.matrix.entries.shape[0])), tol)


@dataclass(frozen=True)
class SeifertDescriptor:
    """Summary data of a Seifert-like group: fiber covolume and chi of its base image."""

    fiber_covolume: Fraction
    base_euler: Fraction
    arises_from_psp: bool = False

    def __post_init__(self) -> None:
        covolume = Fraction(self.fiber_covolume)
        object.__setattr__(self, "fiber_covolume", covolume)
        object.__setattr__(self, "base_euler", Fraction(self.base_euler))
        if covolume <= 0:
            raise DomainError(f"fiber covolume must be positive (got {covolume})")
        if self.arises_from_psp and covolume != 1:
            raise InvariantViolation(
                f"groups arising from PSp have fiber covolume 1 (got {covolume})"
            )

    @classmethod
    def from_psp(cls, base_euler: Fraction | int | str) -> SeifertDescriptor:
        return cls(Fraction(1), Fraction(base_euler), arises_from_psp=True)


def positive_part_phase(M: MatrixLike) -> float:
    """Continuous arg of det(iC + D) along P^t, t in [0, 1], in radians.

    Vanishes when M is orthogonal.
    """
    path = CanonicalPath(M)

    def factor(t: float) -> complex:
        _, _, c, d = split_blocks(path.positive_power(t))
        return complex(np.linalg.det(1j * c + d))

    return track_phase(factor, what="anchor phase")


def automorphy_phase(g: CoverElement, Z: SiegelPoint) -> float:
    """Lifted arg det(CZ + D) / 2 pi for the cover element g, in turns.

    Anchored at iI by w plus the positive-part phase, then continued along
    the segment from iI to Z.
    """
    m = g.matrix.entries
    n = g.n
    anchor = g.w + positive_part_phase(m) / TWO_PI
    base = 1j * np.eye(n)
    if np.array_equal(Z.Z, base):
        return anchor
    _, _, c, d = split_blocks(m)
    direction = Z.Z - base

    def factor(tau: float) -> complex:
        return complex(np.linalg.det(c @ (base + tau * direction) + d))

    return anchor + track_phase(factor, what="automorphy phase") / TWO_PI


def fiber_phase(g: CoverElement, Z: SiegelPoint, exponent: int = DEFAULT_EXPONENT) -> float:
    """Delta(g, Z) in normalized fiber units."""
    unit = fiber_lattice(g.n, exponent).unit
    return exponent * automorphy_phase(g, Z) / float(unit)


def ext_make(g: CoverElement, r: float, exponent: int = DEFAULT_EXPONENT) -> ExtElement:
    """theta: reduce (g, r) modulo (g z, r - iota(z)) to r in [0, 1)."""
    lattice = fiber_lattice(g.n, exponent)
    shift = math.floor(r)
    reduced = multiply_central(g, lattice.generator**shift)
    rest = r - shift
    if rest >= 1.0:
        reduced = multiply_central(reduced, lattice.generator)
        rest = 0.0
    if g.n % 2 == 0 and _leading_sign(reduced.matrix.entries) < 0:
        reduced = multiply_central(reduced, CenterElement(g.n, -1, Fraction(0)))
    return ExtElement(reduced, rest, exponent)


def ext_identity(n: int, exponent: int = DEFAULT_EXPONENT) -> ExtElement:
    return ext_make(CoverElement.identity(n), 0.0, exponent)


def _same_exponent(e1: ExtElement, e2: ExtElement) -> int:
    if e1.exponent != e2.exponent:
        raise ShapeError("extension elements built with different fiber exponents")
    return e1.exponent


def ext_mul(e1: ExtElement, e2: ExtElement) -> ExtElement:
    exponent = _same_exponent(e1, e2)
    return ext_make(cover_mul(e1.g, e2.g), e1.r + e2.r, exponent)


def ext_inverse(e: ExtElement) -> ExtElement:
    return ext_make(cover_inverse(e.g), -e.r, e.exponent)


def act_pair(
    g: CoverElement, r: float, p: ModelPoint, exponent: int = DEFAULT_EXPONENT
) -> ModelPoint:
    """Action of a raw representative (g, r) on p, before any reduction."""
    return ModelPoint(mobius(g.matrix, p.Z), p.t - fiber_phase(g, p.Z, exponent) + r)


def ext_act(e: ExtElement, p: ModelPoint) -> ModelPoint:
    return act_pair(e.g, e.r, p, e.exponent)


def eta(e: ExtElement) -> ProjectiveSymplectic:
    return ProjectiveSymplectic.of(e.g.matrix)


def bundle_projection(p: ModelPoint) -> SiegelPoint:
    return p.Z


def stabilizer_check(e: ExtElement, tol: float = DEFAULT_TAU_ACT) -> bool:
    return ext_act(e, ModelPoint.basepoint(e.n)).allclose(ModelPoint.basepoint(e.n), tol)


def stabilizer_element(U: UnitaryMatrix, exponent: int = DEFAULT_EXPONENT) -> ExtElement:
    """Lift of embed_unitary(U) with the fiber translation that undoes its phase."""
    g = lift(embed_unitary(U))
    return ext_make(g, fiber_phase(g, SiegelPoint.basepoint(U.n), exponent), exponent)


def model_point_of(x: CoverElement, exponent: int = DEFAULT_EXPONENT) -> ModelPoint:
    """Image of x under the cover -> cover / SU(n) identification."""
    base = SiegelPoint.basepoint(x.n)
    return ModelPoint(mobius(x.matrix, base), -fiber_phase(x, base, exponent))


def fiber_scalar(r: float, n: int, exponent: int = DEFAULT_EXPONENT) -> CoverElement:
    """The element of R whose right action translates the fiber by r."""
    unit = float(fiber_lattice(n, exponent).unit)
    return scalar_lift(-TWO_PI * unit * r / (exponent * n), n)


def ext_transitivity_witness(p: ModelPoint, exponent: int = DEFAULT_EXPONENT) -> ExtElement:
    g = lift(transitivity_witness(p.Z))
    return ext_make(g, p.t + fiber_phase(g, SiegelPoint.basepoint(p.n), exponent), exponent)


def section(cls: ProjectiveSymplectic, exponent: int = DEFAULT_EXPONENT) -> ExtElement:
    """A cross-section of eta: eta(section(c)) = c."""
    return ext_make(lift(cls.matrix), 0.0, exponent)


def winding_class(S: UnitaryMatrix, m: int, exponent: int = DEFAULT_EXPONENT) -> ExtElement:
    """(embed(S), m) for S in SU(n).

    Fixes iI and moves the basepoint fiber to -exponent * m / unit.
    """
    return ext_make(CoverElement(su_lift(S).matrix, float(m)), 0.0, exponent)
