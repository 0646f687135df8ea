"""
Symplectic matrix helpers for SiegelKit.

Purpose:
    Value types for Sp(2n,R), U(n) and sp(2n,R), the generators gen_D, gen_N
    and omega, the embedding U(n) -> Sp(2n,R) and the circle map
    rho = det(unitary part of the polar decomposition).

Conventions:
    Omega = [[0, I], [-I, 0]]. Blocks (A, B, C, D) are top-left, top-right,
    bottom-left, bottom-right. U = A + iB embeds as [[A, -B], [B, A]].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import logging
from typing import Union

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla
from scipy.stats import unitary_group

from errors import (
    DimensionError,
    InvariantViolation,
    InvertibilityError,
    NumericError,
    ShapeError,
)

logger = logging.getLogger(__name__)

DEFAULT_TAU_SYM = 1e-9
POLAR_TOL = 1e-13
POLAR_MAX_ITER = 100
COND_LIMIT = 1e12

RealArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]


def _frozen(values: npt.ArrayLike, dtype: type) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _square(arr: np.ndarray, what: str) -> None:
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"{what} must be a square matrix (got shape {arr.shape})")


@lru_cache(maxsize=None)
def omega_array(n: int) -> RealArray:
    if n < 1:
        raise DimensionError(f"block size must be positive (got {n})")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return _frozen(np.block([[zero, eye], [-eye, zero]]), float)


def split_blocks(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = arr.shape[0] // 2
    return arr[:n, :n], arr[:n, n:], arr[n:, :n], arr[n:, n:]


def symplectic_inverse(arr: RealArray) -> RealArray:
    """M^-1 = -Omega M^T Omega, exact for symplectic M and free of solves."""
    om = omega_array(arr.shape[0] // 2)
    return -om @ arr.T @ om


def symplectic_residual(values: npt.ArrayLike) -> float:
    """max-norm of M^T Omega M - Omega."""
    arr = np.asarray(values, dtype=float)
    _square(arr, "symplectic candidate")
    if arr.shape[0] % 2:
        raise DimensionError(f"symplectic matrices have even size (got {arr.shape[0]})")
    om = omega_array(arr.shape[0] // 2)
    return float(np.max(np.abs(arr.T @ om @ arr - om)))


@dataclass(frozen=True, eq=False)
class SymplecticMatrix:
    entries: RealArray

    def __post_init__(self) -> None:
        arr = _frozen(self.entries, float)
        _square(arr, "symplectic matrix")
        if arr.shape[0] % 2:
            raise DimensionError(f"symplectic matrices have even size (got {arr.shape[0]})")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def checked(cls, values: npt.ArrayLike, tol: float = DEFAULT_TAU_SYM) -> SymplecticMatrix:
        matrix = cls(np.asarray(values, dtype=float))
        residual = symplectic_residual(matrix.entries)
        if residual > tol:
            raise InvariantViolation(
                f"matrix is not symplectic: |M^T Omega M - Omega|_max = {residual:.3e} > {tol:.1e}"
            )
        return matrix

    @classmethod
    def identity(cls, n: int) -> SymplecticMatrix:
        return cls(np.eye(2 * n))

    @property
    def n(self) -> int:
        return self.entries.shape[0] // 2

    @property
    def blocks(self) -> tuple[RealArray, RealArray, RealArray, RealArray]:
        return split_blocks(self.entries)

    def __matmul__(self, other: SymplecticMatrix) -> SymplecticMatrix:
        if other.n != self.n:
            raise DimensionError(f"cannot multiply Sp({2 * self.n}) by Sp({2 * other.n})")
        return SymplecticMatrix(self.entries @ other.entries)

    def __neg__(self) -> SymplecticMatrix:
        return SymplecticMatrix(-self.entries)

    def inverse(self) -> SymplecticMatrix:
        return SymplecticMatrix(symplectic_inverse(self.entries))

    def allclose(self, other: SymplecticMatrix, tol: float = DEFAULT_TAU_SYM) -> bool:
        return other.n == self.n and bool(np.max(np.abs(self.entries - other.entries)) <= tol)

    def __repr__(self) -> str:
        return f"SymplecticMatrix(n={self.n}, entries={self.entries.tolist()!r})"


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    entries: ComplexArray

    def __post_init__(self) -> None:
        arr = _frozen(self.entries, complex)
        _square(arr, "unitary matrix")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def checked(cls, values: npt.ArrayLike, tol: float = DEFAULT_TAU_SYM) -> UnitaryMatrix:
        matrix = cls(np.asarray(values, dtype=complex))
        residual = matrix.residual()
        if residual > tol:
            raise InvariantViolation(
                f"matrix is not unitary: |U*U - I|_max = {residual:.3e} > {tol:.1e}"
            )
        return matrix

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def residual(self) -> float:
        u = self.entries
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.n))))

    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))

    def __matmul__(self, other: UnitaryMatrix) -> UnitaryMatrix:
        return UnitaryMatrix(self.entries @ other.entries)

    def allclose(self, other: UnitaryMatrix, tol: float = DEFAULT_TAU_SYM) -> bool:
        return other.n == self.n and bool(np.max(np.abs(self.entries - other.entries)) <= tol)


@dataclass(frozen=True, eq=False)
class LieAlgebraElement:
    """Element X of sp(2n,R), i.e. Omega X symmetric."""

    entries: RealArray

    def __post_init__(self) -> None:
        arr = _frozen(self.entries, float)
        _square(arr, "Lie algebra element")
        if arr.shape[0] % 2:
            raise DimensionError(f"sp(2n) elements have even size (got {arr.shape[0]})")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def checked(cls, values: npt.ArrayLike, tol: float = DEFAULT_TAU_SYM) -> LieAlgebraElement:
        element = cls(np.asarray(values, dtype=float))
        om_x = omega_array(element.entries.shape[0] // 2) @ element.entries
        residual = float(np.max(np.abs(om_x - om_x.T)))
        if residual > tol:
            raise InvariantViolation(f"Omega X is not symmetric (residual {residual:.3e})")
        return element

    def exp(self) -> SymplecticMatrix:
        return SymplecticMatrix(sla.expm(self.entries))


MatrixLike = Union[SymplecticMatrix, npt.ArrayLike]


def as_matrix_array(M: MatrixLike) -> RealArray:
    if isinstance(M, SymplecticMatrix):
        return M.entries
    return np.asarray(M, dtype=float)


def omega(n: int) -> SymplecticMatrix:
    return SymplecticMatrix(omega_array(n))


def is_symplectic(M: MatrixLike, tol: float = DEFAULT_TAU_SYM) -> bool:
    return symplectic_residual(as_matrix_array(M)) <= tol


def gen_D(A: npt.ArrayLike) -> SymplecticMatrix:
    """[[A, 0], [0, A^-T]] for invertible A."""
    a = np.asarray(A, dtype=float)
    _square(a, "gen_D block")
    cond = float(np.linalg.cond(a))
    logger.debug("gen_D cond=%.3e", cond)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise InvertibilityError(f"gen_D needs an invertible block (condition number {cond:.3e})")
    zero = np.zeros_like(a)
    return SymplecticMatrix(np.block([[a, zero], [zero, np.linalg.inv(a).T]]))


def gen_N(B: npt.ArrayLike, tol: float = DEFAULT_TAU_SYM) -> SymplecticMatrix:
    """[[I, B], [0, I]] for symmetric B."""
    b = np.asarray(B, dtype=float)
    _square(b, "gen_N block")
    asym = float(np.max(np.abs(b - b.T))) if b.size else 0.0
    if asym > tol:
        raise ShapeError(f"gen_N needs a symmetric block (asymmetry {asym:.3e})")
    n = b.shape[0]
    eye = np.eye(n)
    return SymplecticMatrix(np.block([[eye, 0.5 * (b + b.T)], [np.zeros((n, n)), eye]]))


def embed_unitary_array(u: ComplexArray) -> RealArray:
    a, b = u.real, u.imag
    return np.block([[a, -b], [b, a]])


def embed_unitary(
    U: UnitaryMatrix | npt.ArrayLike, tol: float = DEFAULT_TAU_SYM
) -> SymplecticMatrix:
    unitary = U if isinstance(U, UnitaryMatrix) else UnitaryMatrix(np.asarray(U, dtype=complex))
    residual = unitary.residual()
    if residual > tol:
        raise InvariantViolation(f"embed_unitary needs a unitary matrix (residual {residual:.3e})")
    return SymplecticMatrix(embed_unitary_array(unitary.entries))


def polar_decomposition(
    M: MatrixLike, *, tol: float = POLAR_TOL, max_iter: int = POLAR_MAX_ITER
) -> tuple[RealArray, RealArray]:
    """Return (P, K) with M = P K, P symmetric positive definite, K orthogonal.

    Newton iteration X <- (X + X^-T)/2 converges quadratically to K. Both
    factors of a symplectic matrix are symplectic.
    """
    m = as_matrix_array(M)
    x = np.array(m, dtype=float)
    delta = np.inf
    for iteration in range(1, max_iter + 1):
        try:
            x_next = 0.5 * (x + np.linalg.inv(x).T)
        except np.linalg.LinAlgError as exc:
            raise NumericError("polar iteration hit a singular iterate", residual=delta) from exc
        delta = float(np.linalg.norm(x_next - x) / np.linalg.norm(x_next))
        x = x_next
        if delta <= tol:
            break
    else:
        raise NumericError(
            f"polar iteration did not converge in {max_iter} steps (last step {delta:.3e})",
            residual=delta,
        )
    logger.debug("polar converged iterations=%d step=%.2e", iteration, delta)
    p = m @ x.T
    return 0.5 * (p + p.T), x


def unitary_part(M: MatrixLike) -> UnitaryMatrix:
    _, k = polar_decomposition(M)
    n = k.shape[0] // 2
    return UnitaryMatrix(k[:n, :n] + 1j * k[n:, :n])


def circle_map(M: MatrixLike) -> complex:
    """rho(M) = det(unitary_part(M)), a unit complex number."""
    return unitary_part(M).det()


def random_lie_algebra_element(n: int, rng: np.random.Generator) -> LieAlgebraElement:
    """X = -Omega S with S symmetric, entries uniform in [-1, 1] scaled by 1/(2n)."""
    s = rng.uniform(-1.0, 1.0, size=(2 * n, 2 * n))
    s = 0.5 * (s + s.T) / (2 * n)
    return LieAlgebraElement(-omega_array(n) @ s)


def random_symplectic(n: int, rng: np.random.Generator) -> SymplecticMatrix:
    return random_lie_algebra_element(n, rng).exp()


def random_unitary(n: int, rng: np.random.Generator) -> UnitaryMatrix:
    """Haar-random element of U(n)."""
    if n == 1:
        return UnitaryMatrix(np.array([[np.exp(1j * rng.uniform(-np.pi, np.pi))]]))
    return UnitaryMatrix(unitary_group.rvs(n, random_state=rng))


def random_special_unitary(n: int, rng: np.random.Generator) -> UnitaryMatrix:
    u = random_unitary(n, rng).entries
    phase = np.exp(1j * np.angle(np.linalg.det(u)) / n)
    return UnitaryMatrix(u / phase)
