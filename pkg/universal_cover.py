"""
Universal cover helpers for SiegelKit.

Purpose:
    Elements of the universal cover of Sp(2n,R) stored as pairs (M, w) with
    exp(2 pi i w) = rho(M). Products add the winding cocycle beta, which is
    found by tracking the argument of rho along the canonical path
    t -> P^t K(t). Also enumerates the center pi^-1({+-I}).

Notes:
    w is measured in full turns, so the k-th lift of +-I has w = k.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import logging
import math
from typing import Callable

import numpy as np
from scipy import linalg as sla

from errors import InvariantViolation, NumericError, ShapeError
from symplectic_core import (
    DEFAULT_TAU_SYM,
    MatrixLike,
    RealArray,
    SymplecticMatrix,
    UnitaryMatrix,
    as_matrix_array,
    circle_map,
    embed_unitary_array,
    polar_decomposition,
    random_symplectic,
    symplectic_inverse,
)

logger = logging.getLogger(__name__)

DEFAULT_TAU_COV = 1e-8
MIN_STEPS = 16
MAX_SUBDIVISIONS = 2**14
MAX_PHASE_STEP = math.pi / 2
BRANCH_TOL = 1e-9
TWO_PI = 2 * math.pi


def track_phase(
    f: Callable[[float], complex],
    *,
    min_steps: int = MIN_STEPS,
    max_steps: int = MAX_SUBDIVISIONS,
    max_step: float = MAX_PHASE_STEP,
    what: str = "phase",
) -> float:
    """Continuous change of arg f(t) over t in [0, 1], in radians.

    An interval is accepted once the phase moves by less than max_step across
    it; otherwise it is bisected.
    """
    ts = np.linspace(0.0, 1.0, min_steps + 1)
    values = [complex(f(float(t))) for t in ts]
    stack = [(ts[i], values[i], ts[i + 1], values[i + 1]) for i in reversed(range(min_steps))]
    segments = min_steps
    total = 0.0
    while stack:
        t0, v0, t1, v1 = stack.pop()
        jump = float(np.angle(v1 * np.conj(v0)))
        if abs(jump) < max_step:
            total += jump
            continue
        segments += 1
        if segments > max_steps:
            raise NumericError(
                f"{what} tracking needed more than {max_steps} subdivisions near t={t0:.6g} "
                f"(phase jump {jump:.3f})",
                residual=abs(jump),
            )
        mid = 0.5 * (t0 + t1)
        vm = complex(f(float(mid)))
        stack.append((mid, vm, t1, v1))
        stack.append((t0, v0, mid, vm))
    logger.debug("%s tracked segments=%d change=%.6f", what, segments, total)
    return total


def _branch_angles(angles: np.ndarray) -> np.ndarray:
    """Eigen-angles of the unitary part, with the log cut moved off the spectrum.

    Principal angles are kept unless an eigenvalue sits on -1; then the cut is
    rotated to the middle of the widest spectral gap.
    """
    if np.all(np.abs(np.abs(angles) - math.pi) > BRANCH_TOL):
        return angles
    ring = np.sort(np.mod(angles, TWO_PI))
    gaps = np.diff(np.concatenate([ring, [ring[0] + TWO_PI]]))
    widest = int(np.argmax(gaps))
    cut = ring[widest] + 0.5 * gaps[widest]
    logger.debug("unitary log cut rotated to angle=%.6f", cut)
    return cut - np.mod(cut - angles, TWO_PI)


class CanonicalPath:
    """t -> P^t K(t) from I to M, where M = P K is the polar decomposition."""

    def __init__(self, M: MatrixLike) -> None:
        self._m = as_matrix_array(M)
        n = self._m.shape[0] // 2
        self._n = n
        p, k = polar_decomposition(self._m)
        self._p_evals, self._p_evecs = sla.eigh(p)
        unitary = k[:n, :n] + 1j * k[n:, :n]
        triangular, self._q = sla.schur(unitary, output="complex")
        self._angles = _branch_angles(np.angle(np.diag(triangular)))

    @property
    def unitary_turns(self) -> float:
        """Winding of rho along the path, i.e. sum of eigen-angles / 2 pi."""
        return float(np.sum(self._angles)) / TWO_PI

    def positive_power(self, t: float) -> RealArray:
        """P^t."""
        if t == 0.0:
            return np.eye(2 * self._n)
        return (self._p_evecs * self._p_evals**t) @ self._p_evecs.T

    def unitary_geodesic(self, t: float) -> RealArray:
        """K(t), the embedded image of exp(t log U)."""
        u_t = (self._q * np.exp(1j * t * self._angles)) @ self._q.conj().T
        return embed_unitary_array(u_t)

    def at(self, t: float) -> RealArray:
        if t == 0.0:
            return np.eye(2 * self._n)
        if t == 1.0:
            return np.array(self._m)
        return self.positive_power(t) @ self.unitary_geodesic(t)


def canonical_path(M: MatrixLike, t: float) -> SymplecticMatrix:
    if not 0.0 <= t <= 1.0:
        raise ShapeError(f"path parameter must lie in [0, 1] (got {t})")
    return SymplecticMatrix(CanonicalPath(M).at(t))


@dataclass(frozen=True, eq=False)
class CoverElement:
    matrix: SymplecticMatrix
    w: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "w", float(self.w))

    @classmethod
    def identity(cls, n: int) -> CoverElement:
        return cls(SymplecticMatrix.identity(n), 0.0)

    @property
    def n(self) -> int:
        return self.matrix.n

    def invariant_residual(self) -> float:
        """|exp(2 pi i w) - rho(M)|."""
        return abs(np.exp(2j * math.pi * self.w) - circle_map(self.matrix))

    def checked(self, tol: float = DEFAULT_TAU_COV) -> CoverElement:
        residual = self.invariant_residual()
        if residual > tol:
            raise InvariantViolation(
                f"w = {self.w} is not a lift of rho(M) (residual {residual:.3e})"
            )
        return self

    def allclose(self, other: CoverElement, tol: float = DEFAULT_TAU_COV) -> bool:
        return self.matrix.allclose(other.matrix, tol) and abs(self.w - other.w) <= tol


def lift(M: MatrixLike) -> CoverElement:
    """Basepoint lift (M, w0) with w0 = arg rho(M) / 2 pi in (-1/2, 1/2]."""
    matrix = M if isinstance(M, SymplecticMatrix) else SymplecticMatrix(as_matrix_array(M))
    w0 = float(np.angle(circle_map(matrix))) / TWO_PI
    if w0 <= -0.5:
        w0 += 1.0
    return CoverElement(matrix, w0)


def _is_identity(m: RealArray) -> bool:
    return bool(np.array_equal(m, np.eye(m.shape[0])))


def winding_cocycle(M1: MatrixLike, M2: MatrixLike) -> float:
    """beta(M1, M2) in turns.

    Tracks rho(M1 g(t)) / rho(g(t)) along the canonical path g of M2.
    """
    m1, m2 = as_matrix_array(M1), as_matrix_array(M2)
    if _is_identity(m1) or _is_identity(m2):
        return 0.0
    path = CanonicalPath(m2)
    turns = path.unitary_turns

    def ratio(t: float) -> complex:
        return circle_map(m1 @ path.at(t)) * np.exp(-2j * math.pi * turns * t)

    return track_phase(ratio, what="cover cocycle") / TWO_PI


def cover_mul(g1: CoverElement, g2: CoverElement) -> CoverElement:
    beta = winding_cocycle(g1.matrix, g2.matrix)
    return CoverElement(g1.matrix @ g2.matrix, g1.w + g2.w + beta)


def cover_inverse(g: CoverElement) -> CoverElement:
    m_inv = symplectic_inverse(g.matrix.entries)
    beta = winding_cocycle(g.matrix, m_inv)
    return CoverElement(SymplecticMatrix(m_inv), -g.w - beta)


@dataclass(frozen=True)
class CenterElement:
    """The k-th lift of sign * I, an element of the center of the cover."""

    n: int
    sign: int
    k: Fraction

    def __post_init__(self) -> None:
        k = Fraction(self.k)
        object.__setattr__(self, "k", k)
        if self.sign not in (1, -1):
            raise InvariantViolation(f"center sign must be +1 or -1 (got {self.sign})")
        if (2 * k).denominator != 1:
            raise InvariantViolation(f"lift index must lie in Z/2 (got {k})")
        # exp(2 pi i k) must equal rho(sign I) = sign^n
        half_turn = (2 * k).numerator % 2 == 1
        if half_turn != (self.sign ** self.n == -1):
            raise InvariantViolation(
                f"k = {k} is not a lift index of {'+' if self.sign > 0 else '-'}I for n = {self.n}"
            )

    def __mul__(self, other: CenterElement) -> CenterElement:
        if other.n != self.n:
            raise ShapeError("center elements of different n cannot be multiplied")
        return CenterElement(self.n, self.sign * other.sign, self.k + other.k)

    def __pow__(self, power: int) -> CenterElement:
        return CenterElement(self.n, self.sign ** (power % 2), self.k * power)

    def inverse(self) -> CenterElement:
        return CenterElement(self.n, self.sign, -self.k)

    def as_cover(self) -> CoverElement:
        return CoverElement(SymplecticMatrix(self.sign * np.eye(2 * self.n)), float(self.k))


def center_elements(n: int, k_range: tuple[float, float] = (-2.0, 2.0)) -> list[CenterElement]:
    """All center elements with lift index in the closed range, sorted by (k, sign)."""
    low, high = k_range
    found = []
    for twice_k in range(math.ceil(2 * low), math.floor(2 * high) + 1):
        for sign in (1, -1):
            if (twice_k % 2 == 1) == (sign**n == -1):
                found.append(CenterElement(n, sign, Fraction(twice_k, 2)))
    return sorted(found, key=lambda z: (z.k, -z.sign))


def multiply_central(g: CoverElement, z: CenterElement) -> CoverElement:
    """g * z, exact: the cocycle vanishes against +-I."""
    if z.n != g.n:
        raise ShapeError("center element and cover element have different n")
    return CoverElement(SymplecticMatrix(z.sign * g.matrix.entries), g.w + float(z.k))


def scalar_lift(a: float, n: int) -> CoverElement:
    """(embed(e^{ia} I), n a / 2 pi), the lift of the center of U(n)."""
    u = np.exp(1j * a) * np.eye(n)
    return CoverElement(SymplecticMatrix(embed_unitary_array(u)), n * a / TWO_PI)


def su_lift(S: UnitaryMatrix, tol: float = DEFAULT_TAU_SYM) -> CoverElement:
    """Lift of S in SU(n) on the identity sheet (w = 0)."""
    if abs(S.det() - 1.0) > tol or S.residual() > tol:
        raise InvariantViolation("su_lift needs a special unitary matrix")
    return CoverElement(SymplecticMatrix(embed_unitary_array(S.entries)), 0.0)


def _unitary_block(g: CoverElement, tol: float) -> np.ndarray:
    m = g.matrix.entries
    if np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) > tol:
        raise InvariantViolation("cover element does not lie over the compact part U(n)")
    n = g.n
    return m[:n, :n] + 1j * m[n:, :n]


def factor_unitary_lift(
    g: CoverElement, tol: float = DEFAULT_TAU_SYM
) -> tuple[float, UnitaryMatrix]:
    """Split g in the lift of U(n) as scalar_lift(a) * su_lift(S)."""
    u = _unitary_block(g, tol)
    a = TWO_PI * g.w / g.n
    return a, UnitaryMatrix(np.exp(-1j * a) * u)


def unitary_factorization(U: UnitaryMatrix) -> tuple[float, UnitaryMatrix]:
    """U = e^{ia} S with a in [0, 2 pi / n) and det S = 1."""
    a = float(np.mod(np.angle(U.det()) / U.n, TWO_PI / U.n))
    return a, UnitaryMatrix(np.exp(-1j * a) * U.entries)


def random_cover_element(n: int, rng: np.random.Generator, sheets: int = 1) -> CoverElement:
    """Lift of a random symplectic matrix, shifted onto a random sheet."""
    base = lift(random_symplectic(n, rng))
    return CoverElement(base.matrix, base.w + float(rng.integers(-sheets, sheets + 1)))
