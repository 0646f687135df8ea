"""
Volume helpers for SiegelKit.

Purpose:
    Exact Bernoulli numbers, zeta(1 - 2k) and chi(Sp(2n,Z)) as Fractions, the
    Seifert-like volume formula vol = |covolume * chi|, and a Monte-Carlo
    check that the extended action preserves the product measure
    (invariant density on h_n times Lebesgue measure on the fiber).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import logging
from math import comb, sqrt
from typing import Literal

import numpy as np
import numpy.typing as npt

from central_extension import (
    DEFAULT_EXPONENT,
    ModelPoint,
    SeifertDescriptor,
    ext_act,
    ext_inverse,
    ext_make,
)
from errors import DomainError
from siegel_space import (
    DEFAULT_FD_STEP,
    SiegelPoint,
    chart_coordinates,
    density_batch,
    from_chart_coordinates,
    in_siegel_batch,
    mobius_batch,
    pushforward_jacobian_batch,
)
from symplectic_core import MatrixLike, RealArray, SymplecticMatrix, as_matrix_array
from universal_cover import lift

logger = logging.getLogger(__name__)

DISCRETIZATION_ALLOWANCE = 1e-3
CHUNK_SIZE = 100_000
MAX_STRATA = 512
FIBER_PROBES = 4

JacobianMethod = Literal["pushforward", "finite-difference"]


@lru_cache(maxsize=None)
def _bernoulli_table(m: int) -> tuple[Fraction, ...]:
    """B_0..B_m via Akiyama-Tanigawa (B_1 = +1/2 convention)."""
    row = [Fraction(0)] * (m + 1)
    out = []
    for i in range(m + 1):
        row[i] = Fraction(1, i + 1)
        for j in range(i, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        out.append(row[0])
    return tuple(out)


def bernoulli(m: int) -> Fraction:
    if m < 2 or m % 2:
        raise DomainError(f"bernoulli needs an even index m >= 2 (got {m})")
    return _bernoulli_table(m)[m]


def bernoulli_recurrence_residual(m: int) -> Fraction:
    """sum_{j=0}^{m} C(m+1, j) B_j with B_1 = -1/2; zero for every m >= 1."""
    table = list(_bernoulli_table(m))
    if m >= 1:
        table[1] = Fraction(-1, 2)
    return sum((comb(m + 1, j) * table[j] for j in range(m + 1)), Fraction(0))


def zeta_neg(k: int) -> Fraction:
    """zeta(1 - 2k) = -B_2k / 2k."""
    if k < 1:
        raise DomainError(f"zeta_neg needs k >= 1 (got {k})")
    return -bernoulli(2 * k) / (2 * k)


def euler_char_factors(n: int) -> list[Fraction]:
    if n < 1:
        raise DomainError(f"euler_char_sp needs n >= 1 (got {n})")
    return [zeta_neg(k) for k in range(1, n + 1)]


def euler_char_sp(n: int) -> Fraction:
    """chi(Sp(2n,Z)) = prod_{k=1}^{n} zeta(1 - 2k)."""
    result = Fraction(1)
    for factor in euler_char_factors(n):
        result *= factor
    return result


@dataclass(frozen=True)
class VolumeResult:
    volume: Fraction
    signed_volume: Fraction
    sign_convention_applied: bool = True


def seifert_volume(d: SeifertDescriptor) -> VolumeResult:
    signed = d.fiber_covolume * d.base_euler
    return VolumeResult(volume=abs(signed), signed_volume=signed, sign_convention_applied=True)


def volume_ratio(first: SeifertDescriptor, second: SeifertDescriptor) -> Fraction:
    """vol(first) / vol(second), exact."""
    denominator = seifert_volume(second).volume
    if denominator == 0:
        raise DomainError("second descriptor has zero volume")
    return seifert_volume(first).volume / denominator


@dataclass(frozen=True, eq=False)
class MeasureBox:
    """Base box in chart coordinates (Re Z_ij, Im Z_ij for i <= j) times a fiber interval."""

    low: RealArray
    high: RealArray
    fiber_low: float
    fiber_high: float

    def __post_init__(self) -> None:
        low = np.asarray(self.low, dtype=float)
        high = np.asarray(self.high, dtype=float)
        if low.shape != high.shape or low.ndim != 1:
            raise DomainError("box bounds must be vectors of equal length")
        n = int(round((sqrt(1 + 4 * low.size) - 1) / 2))
        if n * (n + 1) != low.size or n < 1:
            raise DomainError(f"box has {low.size} coordinates, not n(n+1) for any n")
        if np.any(high <= low) or not self.fiber_high > self.fiber_low:
            raise DomainError("measure box is degenerate")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def around(
        cls, Z: SiegelPoint, half_width: float, fiber: tuple[float, float] = (0.0, 1.0)
    ) -> MeasureBox:
        center = chart_coordinates(Z.Z)
        return cls(center - half_width, center + half_width, fiber[0], fiber[1])

    @property
    def n(self) -> int:
        return int(round((sqrt(1 + 4 * self.low.size) - 1) / 2))

    @property
    def volume(self) -> float:
        return float(np.prod(self.high - self.low)) * (self.fiber_high - self.fiber_low)

    def sample(self, rng: np.random.Generator, count: int) -> RealArray:
        return rng.uniform(self.low, self.high, size=(count, self.low.size))

    def strata_per_axis(self, samples: int) -> int:
        """Grid cells per Im Z axis, keeping at least two samples in every cell."""
        axes = self.low.size // 2
        cells = min(MAX_STRATA, samples // 2)
        per_axis = 1
        while (per_axis + 1) ** axes <= cells:
            per_axis += 1
        return per_axis

    def sample_cells(
        self, rng: np.random.Generator, cells: npt.NDArray[np.int64], per_axis: int
    ) -> RealArray:
        """One uniform point inside each listed cell of a per_axis grid on the Im Z coordinates.

        The density depends on Im Z only, so the Re Z coordinates stay unstratified.
        """
        coords = self.sample(rng, cells.size)
        axes = self.low.size // 2
        digits = (cells[:, None] // per_axis ** np.arange(axes)) % per_axis
        fraction = (digits + rng.uniform(size=(cells.size, axes))) / per_axis
        low, high = self.low[axes:], self.high[axes:]
        coords[:, axes:] = low + fraction * (high - low)
        return coords


@dataclass(frozen=True)
class MeasureCheckResult:
    residual: float
    measure_box: float
    measure_preimage: float
    inside_fraction: float
    fiber_shift_residual: float
    samples: int
    relative_standard_error: float = 0.0
    strata: int = 1

    @property
    def threshold(self) -> float:
        return measure_threshold(self.samples)


def measure_threshold(samples: int) -> float:
    return 3.0 / sqrt(samples) + DISCRETIZATION_ALLOWANCE


class _CellSums:
    """Per-cell running sums for a stratified mean."""

    def __init__(self, cells: int) -> None:
        self.count = np.zeros(cells)
        self.total = np.zeros(cells)
        self.squares = np.zeros(cells)

    def add(self, cells: npt.NDArray[np.int64], values: RealArray) -> None:
        size = self.count.size
        self.count += np.bincount(cells, minlength=size)
        self.total += np.bincount(cells, weights=values, minlength=size)
        self.squares += np.bincount(cells, weights=values * values, minlength=size)

    def mean(self) -> float:
        return float(np.mean(self.total / self.count))

    def variance_of_mean(self) -> float:
        means = self.total / self.count
        spread = np.maximum(self.squares - self.count * means * means, 0.0)
        within = np.divide(spread, self.count - 1, out=np.zeros_like(spread), where=self.count > 1)
        return float(np.sum(within / self.count)) / self.count.size**2


def _fd_jacobian_batch(m_inv: RealArray, coords: RealArray, n: int, h: float) -> RealArray:
    dim = coords.shape[1]
    jac = np.empty((coords.shape[0], dim, dim))
    for k in range(dim):
        step = np.zeros(dim)
        step[k] = h
        plus = chart_coordinates(mobius_batch(m_inv, from_chart_coordinates(coords + step, n)))
        minus = chart_coordinates(mobius_batch(m_inv, from_chart_coordinates(coords - step, n)))
        jac[:, :, k] = (plus - minus) / (2 * h)
    return np.abs(np.linalg.det(jac))


def _preimage_weights(
    m_inv: RealArray, coords: RealArray, n: int, jacobian: JacobianMethod
) -> RealArray:
    """density(h^-1 y) |Jac h^-1(y)| for y in the box, zero where y leaves h_n."""
    zs = from_chart_coordinates(coords, n)
    weights = np.zeros(coords.shape[0])
    inside = in_siegel_batch(zs)
    if not np.any(inside):
        return weights
    pre = mobius_batch(m_inv, zs[inside])
    if jacobian == "pushforward":
        jac = pushforward_jacobian_batch(m_inv, zs[inside])
    else:
        jac = _fd_jacobian_batch(m_inv, coords[inside], n, DEFAULT_FD_STEP)
    weights[inside] = density_batch(pre) * jac
    return weights


def measure_check_details(
    M: MatrixLike,
    r: float,
    box: MeasureBox,
    samples: int,
    rng: np.random.Generator,
    *,
    exponent: int = DEFAULT_EXPONENT,
    jacobian: JacobianMethod = "pushforward",
    strata: int | None = None,
) -> MeasureCheckResult:
    """Estimate lambda(E) and lambda(h^-1 E) from independent stratified sample sets.

    Both sets spread their samples evenly over a grid of `strata` cells per
    Im Z axis (chosen from `samples` when omitted) and average the cell
    means. h acts on each fiber by a translation, so its Jacobian is block
    triangular with a unit fiber block; the preimage weight only needs the
    base Jacobian. The fiber block is probed directly on a few points.
    """
    if samples < 1:
        raise DomainError("samples must be positive")
    m = as_matrix_array(M)
    n = box.n
    if m.shape != (2 * n, 2 * n):
        raise DomainError(f"matrix size {m.shape} does not match a box for n = {n}")
    per_axis = box.strata_per_axis(samples) if strata is None else strata
    cells_total = per_axis ** (box.low.size // 2)
    if per_axis < 1 or cells_total > samples:
        raise DomainError(f"{samples} samples cannot fill {per_axis} strata per axis")
    m_inv = SymplecticMatrix(m).inverse().entries

    box_sums = _CellSums(cells_total)
    pre_sums = _CellSums(cells_total)
    inside_count = 0
    offset = 0
    while offset < samples:
        count = min(CHUNK_SIZE, samples - offset)
        cells = (offset + np.arange(count)) % cells_total
        offset += count
        dens_a = density_batch(from_chart_coordinates(box.sample_cells(rng, cells, per_axis), n))
        box_sums.add(cells, dens_a)
        inside_count += int(np.count_nonzero(dens_a))
        coords_b = box.sample_cells(rng, cells, per_axis)
        pre_sums.add(cells, _preimage_weights(m_inv, coords_b, n, jacobian))

    if inside_count == 0:
        raise DomainError("measure box does not meet the Siegel space")
    mean_box = box_sums.mean()
    measure_box = box.volume * mean_box
    measure_pre = box.volume * pre_sums.mean()
    residual = abs(measure_pre - measure_box) / measure_box
    standard_error = sqrt(box_sums.variance_of_mean() + pre_sums.variance_of_mean()) / mean_box

    fiber_residual = _fiber_shift_residual(SymplecticMatrix(m), r, box, rng, exponent)
    logger.info(
        "measure check n=%d samples=%d strata=%d residual=%.3e stderr=%.3e fiber_shift=%.2e",
        n,
        samples,
        per_axis,
        residual,
        standard_error,
        fiber_residual,
    )
    return MeasureCheckResult(
        residual=residual,
        measure_box=measure_box,
        measure_preimage=measure_pre,
        inside_fraction=inside_count / samples,
        fiber_shift_residual=fiber_residual,
        samples=samples,
        relative_standard_error=standard_error,
        strata=per_axis,
    )


def _fiber_shift_residual(
    M: SymplecticMatrix, r: float, box: MeasureBox, rng: np.random.Generator, exponent: int
) -> float:
    """max |(t2' - t1') - (t2 - t1)| for h^-1 applied at a few box points."""
    h_inv = ext_inverse(ext_make(lift(M), r, exponent))
    worst = 0.0
    probes = 0
    for coords in box.sample(rng, 16 * FIBER_PROBES):
        z = from_chart_coordinates(coords, box.n)
        if not in_siegel_batch(z[None])[0]:
            continue
        point = SiegelPoint(z)
        t1, t2 = rng.uniform(box.fiber_low, box.fiber_high, size=2)
        image1 = ext_act(h_inv, ModelPoint(point, t1))
        image2 = ext_act(h_inv, ModelPoint(point, t2))
        worst = max(worst, abs((image2.t - image1.t) - (t2 - t1)))
        probes += 1
        if probes == FIBER_PROBES:
            break
    return worst


def product_measure_check(
    n: int,
    M: MatrixLike,
    r: float,
    box: MeasureBox,
    samples: int,
    rng: np.random.Generator,
    *,
    exponent: int = DEFAULT_EXPONENT,
    jacobian: JacobianMethod = "pushforward",
) -> float:
    """Relative residual |lambda(h^-1 E) - lambda(E)| / lambda(E)."""
    if box.n != n:
        raise DomainError(f"box is for n = {box.n}, not n = {n}")
    details = measure_check_details(
        M, r, box, samples, rng, exponent=exponent, jacobian=jacobian
    )
    return details.residual
