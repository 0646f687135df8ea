"""
Siegel upper half-space helpers for SiegelKit.

Purpose:
    Points Z = X + iY of h_n, the Mobius action Z -> (AZ + B)(CZ + D)^-1,
    the Grassmannian chart [Z; I], tangent pushforward, the n = 2 normal
    bundle check and the invariant density det(Y)^-(n+1).

Notes:
    Batched variants (suffix _batch) take stacks of shape (N, n, n) and are
    what the Monte-Carlo measure check runs on.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla

from errors import (
    ConditioningError,
    InvariantViolation,
    NumericError,
    ShapeError,
    UnsupportedDimensionError,
)
from symplectic_core import (
    COND_LIMIT,
    DEFAULT_TAU_SYM,
    ComplexArray,
    MatrixLike,
    RealArray,
    SymplecticMatrix,
    UnitaryMatrix,
    as_matrix_array,
    gen_D,
    gen_N,
    omega,
    split_blocks,
)

logger = logging.getLogger(__name__)

DEFAULT_TAU_ACT = 1e-8
CHOLESKY_PIVOT = 1e-12
RANK_TOL = 1e-10
SUBSPACE_TOL = 1e-8
CHART_COND_LIMIT = 1e8
DEFAULT_FD_STEP = 1e-5


def _cholesky_ok(y: RealArray) -> bool:
    try:
        lower = np.linalg.cholesky(y)
    except np.linalg.LinAlgError:
        return False
    return bool(np.min(np.diag(lower)) ** 2 > CHOLESKY_PIVOT)


@dataclass(frozen=True, eq=False)
class SiegelPoint:
    Z: ComplexArray

    def __post_init__(self) -> None:
        z = np.array(self.Z, dtype=complex, copy=True)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ShapeError(f"Siegel point must be square (got shape {z.shape})")
        asym = float(np.max(np.abs(z - z.T)))
        if asym > DEFAULT_TAU_SYM * max(1.0, float(np.max(np.abs(z)))):
            raise InvariantViolation(f"Siegel point is not symmetric (asymmetry {asym:.3e})")
        z = 0.5 * (z + z.T)
        if not _cholesky_ok(z.imag):
            raise InvariantViolation("imaginary part of Siegel point is not positive definite")
        z.setflags(write=False)
        object.__setattr__(self, "Z", z)

    @classmethod
    def from_parts(cls, X: npt.ArrayLike, Y: npt.ArrayLike) -> SiegelPoint:
        return cls(np.asarray(X, dtype=float) + 1j * np.asarray(Y, dtype=float))

    @classmethod
    def basepoint(cls, n: int) -> SiegelPoint:
        return cls(1j * np.eye(n))

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def X(self) -> RealArray:
        return self.Z.real

    @property
    def Y(self) -> RealArray:
        return self.Z.imag

    def allclose(self, other: SiegelPoint, tol: float = DEFAULT_TAU_ACT) -> bool:
        return other.n == self.n and bool(np.max(np.abs(self.Z - other.Z)) <= tol)


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    """A Lagrangian-chart point [top; bottom] of P_n, modulo right GL(n,C)."""

    top: ComplexArray
    bottom: ComplexArray

    def __post_init__(self) -> None:
        top = np.array(self.top, dtype=complex, copy=True)
        bottom = np.array(self.bottom, dtype=complex, copy=True)
        if top.shape != bottom.shape or top.ndim != 2 or top.shape[0] != top.shape[1]:
            raise ShapeError("Grassmann blocks must be square and of equal shape")
        sv = np.linalg.svd(np.vstack([top, bottom]), compute_uv=False)
        if sv[-1] <= RANK_TOL * sv[0]:
            raise InvariantViolation(
                f"stacked matrix has rank < n (singular values {sv[-1]:.3e}/{sv[0]:.3e})"
            )
        top.setflags(write=False)
        bottom.setflags(write=False)
        object.__setattr__(self, "top", top)
        object.__setattr__(self, "bottom", bottom)

    @property
    def stacked(self) -> ComplexArray:
        return np.vstack([self.top, self.bottom])

    def chart(self) -> ComplexArray | None:
        """top @ bottom^-1 when the bottom block is safely invertible."""
        if np.linalg.cond(self.bottom) > CHART_COND_LIMIT:
            return None
        return np.linalg.solve(self.bottom.T, self.top.T).T

    def equivalent(self, other: GrassmannPoint, tol: float = SUBSPACE_TOL) -> bool:
        mine, theirs = self.chart(), other.chart()
        if mine is not None and theirs is not None:
            scale = max(1.0, float(np.max(np.abs(mine))))
            return bool(np.max(np.abs(mine - theirs)) <= tol * scale)
        q1, _ = np.linalg.qr(self.stacked)
        q2, _ = np.linalg.qr(other.stacked)
        distance = np.linalg.norm(q1 @ q1.conj().T - q2 @ q2.conj().T, 2)
        return bool(distance < tol)


@dataclass(frozen=True, eq=False)
class TangentVector:
    V: ComplexArray
    base: SiegelPoint

    def __post_init__(self) -> None:
        v = np.array(self.V, dtype=complex, copy=True)
        if v.shape != self.base.Z.shape:
            raise ShapeError(f"tangent vector shape {v.shape} does not match its base point")
        v.setflags(write=False)
        object.__setattr__(self, "V", v)


def automorphy_matrix(M: MatrixLike, Z: ComplexArray) -> ComplexArray:
    """CZ + D."""
    _, _, c, d = split_blocks(as_matrix_array(M))
    return c @ Z + d


def automorphy_factor(M: MatrixLike, Z: SiegelPoint) -> complex:
    """det(CZ + D), never zero on h_n."""
    return complex(np.linalg.det(automorphy_matrix(M, Z.Z)))


def fractional_linear(M: MatrixLike, Z: ComplexArray) -> ComplexArray:
    """(AZ + B)(CZ + D)^-1 on raw matrices, symmetric or not."""
    a, b, c, d = split_blocks(as_matrix_array(M))
    den = c @ Z + d
    cond = float(np.linalg.cond(den))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"CZ + D is numerically singular (condition number {cond:.3e})")
    return np.linalg.solve(den.T, (a @ Z + b).T).T


def mobius(M: MatrixLike, Z: SiegelPoint, tol: float = DEFAULT_TAU_ACT) -> SiegelPoint:
    w = fractional_linear(M, Z.Z)
    drift = float(np.max(np.abs(w - w.T))) / max(1.0, float(np.max(np.abs(w))))
    if drift > tol:
        raise NumericError(
            f"Mobius image drifted off the symmetric matrices ({drift:.3e})", residual=drift
        )
    return SiegelPoint(0.5 * (w + w.T))


def chart_point(Z: SiegelPoint) -> GrassmannPoint:
    return GrassmannPoint(Z.Z, np.eye(Z.n, dtype=complex))


def grassmann_act(M: MatrixLike, P: GrassmannPoint) -> GrassmannPoint:
    a, b, c, d = split_blocks(as_matrix_array(M))
    return GrassmannPoint(a @ P.top + b @ P.bottom, c @ P.top + d @ P.bottom)


def transitivity_witness(Z: SiegelPoint) -> SymplecticMatrix:
    """gen_N(X) gen_D(S) with Y = S S^T, which carries iI to Z."""
    try:
        s = sla.cholesky(Z.Y, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InvariantViolation("Cholesky factorization of Im Z failed") from exc
    return gen_N(Z.X) @ gen_D(s)


def stabilizer_test(M: MatrixLike, tol: float = DEFAULT_TAU_ACT) -> UnitaryMatrix | None:
    """Return U with embed_unitary(U) = M if M fixes iI, else None."""
    m = as_matrix_array(M)
    n = m.shape[0] // 2
    base = SiegelPoint.basepoint(n)
    image = mobius(m, base)
    if np.max(np.abs(image.Z - base.Z)) > tol:
        return None
    a, _, b, _ = split_blocks(m)
    return UnitaryMatrix(a + 1j * b)


def pushforward(M: MatrixLike, V: TangentVector) -> TangentVector:
    """W = (CZ + D)^-T V (CZ + D)^-1, based at mobius(M, Z)."""
    inv = np.linalg.inv(automorphy_matrix(M, V.base.Z))
    return TangentVector(inv.T @ V.V @ inv, mobius(M, V.base))


def pushforward_fd(M: MatrixLike, V: TangentVector, h: float = DEFAULT_FD_STEP) -> ComplexArray:
    """Central difference of s -> (M . (Z + sV)) at s = 0."""
    z, v = V.base.Z, V.V
    return (fractional_linear(M, z + h * v) - fractional_linear(M, z - h * v)) / (2 * h)


def vec1() -> ComplexArray:
    return np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


def vec2() -> ComplexArray:
    return 1j * vec1()


def normal_bundle_check(M: MatrixLike, Z: SiegelPoint) -> tuple[complex, float]:
    """Split pushforward(M, vec1) into a vec1 + b vec2 plus an orthogonal remainder.

    Returns (a + ib, |remainder|). Only defined for n = 2.
    """
    if Z.n != 2:
        raise UnsupportedDimensionError(
            f"normal bundle check exists for n = 2 only (got n = {Z.n})"
        )
    v1, v2 = vec1(), vec2()
    w = pushforward(M, TangentVector(v1, Z)).V
    # real coordinates of w on span {vec1, vec2}, read as one complex number
    a = np.vdot(v1, w).real / np.vdot(v1, v1).real
    b = np.vdot(v2, w).real / np.vdot(v2, v2).real
    remainder = w - a * v1 - b * v2
    return complex(a, b), float(np.linalg.norm(remainder))


def normal_bundle_circle_act(M: MatrixLike, Z: SiegelPoint, angle: float) -> float:
    """Rotate a unit normal direction (angle of vec1) at Z by the tangent map."""
    coefficient, _ = normal_bundle_check(M, Z)
    return float(np.mod(angle + np.angle(coefficient), 2 * np.pi))


def invariant_density(Z: SiegelPoint) -> float:
    return float(np.linalg.det(Z.Y) ** (-(Z.n + 1)))


def chart_coordinates(Z: ComplexArray) -> RealArray:
    """(Re Z_ij, Im Z_ij) for i <= j, the n(n+1) real chart coordinates."""
    iu = np.triu_indices(Z.shape[-1])
    upper = Z[..., iu[0], iu[1]]
    return np.concatenate([upper.real, upper.imag], axis=-1)


def from_chart_coordinates(coords: RealArray, n: int) -> ComplexArray:
    iu = np.triu_indices(n)
    m = len(iu[0])
    values = coords[..., :m] + 1j * coords[..., m:]
    z = np.zeros(coords.shape[:-1] + (n, n), dtype=complex)
    z[..., iu[0], iu[1]] = values
    z[..., iu[1], iu[0]] = values
    return z


def mobius_jacobian_fd(M: MatrixLike, Z: SiegelPoint, h: float = DEFAULT_FD_STEP) -> float:
    """|det| of the real Jacobian of Z -> M.Z, by central differences in chart coordinates."""
    base = chart_coordinates(Z.Z)
    dim = base.size
    jac = np.empty((dim, dim))
    for k in range(dim):
        step = np.zeros(dim)
        step[k] = h
        plus = fractional_linear(M, from_chart_coordinates(base + step, Z.n))
        minus = fractional_linear(M, from_chart_coordinates(base - step, Z.n))
        jac[:, k] = (chart_coordinates(plus) - chart_coordinates(minus)) / (2 * h)
    return float(abs(np.linalg.det(jac)))


def density_invariance_residual(M: MatrixLike, Z: SiegelPoint, h: float = DEFAULT_FD_STEP) -> float:
    """Relative defect of density(M.Z) |Jac| = density(Z)."""
    before = invariant_density(Z)
    after = invariant_density(mobius(M, Z)) * mobius_jacobian_fd(M, Z, h)
    return abs(after - before) / before


def mobius_batch(M: MatrixLike, Zs: ComplexArray) -> ComplexArray:
    a, b, c, d = split_blocks(as_matrix_array(M))
    num = a @ Zs + b
    den = c @ Zs + d
    w = np.linalg.solve(np.swapaxes(den, -1, -2), np.swapaxes(num, -1, -2))
    w = np.swapaxes(w, -1, -2)
    return 0.5 * (w + np.swapaxes(w, -1, -2))


def in_siegel_batch(Zs: ComplexArray) -> npt.NDArray[np.bool_]:
    return np.linalg.eigvalsh(Zs.imag)[..., 0] > 0


def density_batch(Zs: ComplexArray) -> RealArray:
    """det(Im Z)^-(n+1) per sample; zero outside h_n."""
    n = Zs.shape[-1]
    inside = in_siegel_batch(Zs)
    dets = np.linalg.det(Zs.imag)
    out = np.zeros(Zs.shape[0])
    out[inside] = dets[inside] ** (-(n + 1))
    return out


def pushforward_jacobian_batch(M: MatrixLike, Zs: ComplexArray) -> RealArray:
    """Real Jacobian |det| of Z -> M.Z from the closed-form tangent map.

    The tangent map V -> N^T V N (N = (CZ + D)^-1) is complex linear on
    symmetric matrices, so the real determinant is |det_C|^2.
    """
    n = Zs.shape[-1]
    inv = np.linalg.inv(automorphy_matrix(M, Zs))
    iu = np.triu_indices(n)
    m = len(iu[0])
    lin = np.empty((Zs.shape[0], m, m), dtype=complex)
    for col, (a, b) in enumerate(zip(*iu)):
        basis = np.zeros((n, n))
        basis[a, b] = basis[b, a] = 1.0
        image = np.swapaxes(inv, -1, -2) @ basis @ inv
        lin[:, :, col] = image[:, iu[0], iu[1]]
    return np.abs(np.linalg.det(lin)) ** 2


def random_siegel_point(n: int, rng: np.random.Generator) -> SiegelPoint:
    x = rng.uniform(-1.0, 1.0, size=(n, n))
    low = rng.uniform(-0.5, 0.5, size=(n, n))
    y = low @ low.T + 0.5 * np.eye(n)
    return SiegelPoint.from_parts(0.5 * (x + x.T), y)


def random_generator_word(n: int, length: int, rng: np.random.Generator) -> SymplecticMatrix:
    """Product of `length` random letters from gen_D, gen_N and omega."""
    word = SymplecticMatrix.identity(n)
    for _ in range(length):
        letter = rng.integers(3)
        if letter == 0:
            factor = gen_D(sla.expm(0.3 * rng.uniform(-1.0, 1.0, size=(n, n))))
        elif letter == 1:
            b = rng.uniform(-1.0, 1.0, size=(n, n))
            factor = gen_N(0.5 * (b + b.T))
        else:
            factor = omega(n)
        word = word @ factor
    return word
