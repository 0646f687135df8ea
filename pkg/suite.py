"""
Verification battery for SiegelKit.

Purpose:
    Runs the acceptance properties (exact Euler characteristics, the normal
    bundle computations, Mobius axioms, cover and extension group laws,
    measure invariance, the volume formula) on seeded random samples and
    reports worst-case residuals against their thresholds.

Each check owns a fixed substream counter, so adding a check never changes
the samples drawn by the others.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import logging
import math
import time
from typing import Any, Callable

import numpy as np

from central_extension import (
    ModelPoint,
    ProjectiveSymplectic,
    SeifertDescriptor,
    act_pair,
    bundle_projection,
    eta,
    ext_act,
    ext_identity,
    ext_make,
    ext_mul,
    ext_transitivity_witness,
    fiber_lattice,
    fiber_phase,
    fiber_scalar,
    iota,
    model_point_of,
    section,
    stabilizer_check,
    stabilizer_element,
    winding_class,
)
from config import Config, substream
from errors import InvariantViolation
from siegel_space import (
    SiegelPoint,
    automorphy_factor,
    chart_point,
    density_invariance_residual,
    grassmann_act,
    mobius,
    normal_bundle_check,
    random_generator_word,
    random_siegel_point,
    stabilizer_test,
    transitivity_witness,
)
from symplectic_core import (
    embed_unitary,
    gen_D,
    gen_N,
    omega,
    random_special_unitary,
    random_symplectic,
    random_unitary,
)
from universal_cover import (
    CenterElement,
    CoverElement,
    center_elements,
    cover_inverse,
    cover_mul,
    factor_unitary_lift,
    lift,
    multiply_central,
    random_cover_element,
    scalar_lift,
    su_lift,
)
from volume import (
    MeasureBox,
    bernoulli_recurrence_residual,
    euler_char_sp,
    measure_check_details,
    measure_threshold,
    seifert_volume,
    volume_ratio,
    zeta_neg,
)

logger = logging.getLogger(__name__)

EXACT = 0.0
COEFFICIENT_TOL = 1e-10
ASSOCIATIVITY_TOL = 1e-7
FD_TOL = 1e-4
FD_POINTS = 20
BERNOULLI_MAX = 40
COVER_DIMENSIONS = (2, 3)
MEASURE_DIMENSION = 2
MEASURE_ELEMENTS = 20
MEASURE_HALF_WIDTH = 0.2
DECAY_REPEATS = 16
DECAY_FACTOR = 16
DECAY_SCALE = 16
DECAY_RATIO = (2.0, 8.0)
LATTICE_DIMENSIONS = (1, 2, 3, 4)
PRODUCT_CHAIN = 8


@dataclass
class CheckResult:
    name: str
    residuals: dict[str, float] = field(default_factory=dict)
    thresholds: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, Any] = field(default_factory=dict)

    def record(self, key: str, residual: float, threshold: float) -> None:
        """Keep the worst residual seen under key."""
        self.residuals[key] = max(self.residuals.get(key, 0.0), float(residual))
        self.thresholds[key] = threshold

    def record_flag(self, key: str, ok: bool) -> None:
        self.record(key, 0.0 if ok else 1.0, EXACT)

    @property
    def passed(self) -> bool:
        return all(self.residuals[k] <= self.thresholds[k] for k in self.residuals)

    def to_dict(self) -> dict[str, Any]:
        return {
            "outputs": self.outputs,
            "pass": self.passed,
            "residuals": self.residuals,
            "thresholds": self.thresholds,
        }


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(b))))


def _random_fraction(rng: np.random.Generator, positive: bool = False) -> Fraction:
    numerator = int(rng.integers(1 if positive else -50, 51))
    return Fraction(numerator, int(rng.integers(1, 30)))


def check_euler_characteristic(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("euler_characteristic")
    chi1, chi2 = euler_char_sp(1), euler_char_sp(2)
    result.record("chi_n1", float(abs(chi1 - Fraction(-1, 12))), EXACT)
    result.record("chi_n2", float(abs(chi2 - Fraction(-1, 1440))), EXACT)
    result.record("zeta_product", float(abs(chi2 - zeta_neg(1) * zeta_neg(2))), EXACT)
    for m in range(1, BERNOULLI_MAX + 1):
        result.record("bernoulli_recurrence", float(abs(bernoulli_recurrence_residual(m))), EXACT)
    result.outputs = {"chi_n1": str(chi1), "chi_n2": str(chi2)}
    return result


def check_normal_bundle(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("normal_bundle")
    n = MEASURE_DIMENSION
    for _ in range(config.samples):
        M = random_generator_word(n, int(rng.integers(1, 7)), rng)
        Z = random_siegel_point(n, rng)
        coefficient, remainder = normal_bundle_check(M, Z)
        expected = 1.0 / automorphy_factor(M, Z)
        result.record("off_span", remainder / (abs(coefficient) * math.sqrt(2.0)), config.tau_act)
        result.record("coefficient", abs(coefficient - expected) / abs(expected), config.tau_act)
    return result


def check_generator_coefficients(config: Config, rng: np.random.Generator) -> CheckResult:
    """Omega, gen_D and gen_N images of vec1 at random points and parameters."""
    result = CheckResult("generator_coefficients")
    n = MEASURE_DIMENSION
    for _ in range(config.samples):
        Z = random_siegel_point(n, rng)
        c_omega, _ = normal_bundle_check(omega(n), Z)
        expected = 1.0 / complex(np.linalg.det(Z.Z))
        result.record("omega", abs(c_omega - expected) / abs(expected), COEFFICIENT_TOL)

        a = rng.uniform(-1.0, 1.0, size=(n, n)) + 2.0 * np.eye(n)
        c_d, _ = normal_bundle_check(gen_D(a), Z)
        det_a = float(np.linalg.det(a))
        result.record("gen_D", abs(c_d - det_a) / abs(det_a), COEFFICIENT_TOL)

        b = rng.uniform(-1.0, 1.0, size=(n, n))
        c_n, _ = normal_bundle_check(gen_N(0.5 * (b + b.T)), Z)
        result.record("gen_N", abs(c_n - 1.0), COEFFICIENT_TOL)
    return result


def check_mobius_axioms(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("mobius_axioms")
    n, tol = config.n, config.tau_act
    base = SiegelPoint.basepoint(n)
    false_negatives = 0
    false_positives = 0
    for i in range(config.samples):
        M1 = random_symplectic(n, rng)
        M2 = random_symplectic(n, rng)
        Z = random_siegel_point(n, rng)
        stepwise = mobius(M1, mobius(M2, Z)).Z
        result.record("composition", _relative(mobius(M1 @ M2, Z).Z, stepwise), tol)

        U = random_unitary(n, rng)
        found = stabilizer_test(embed_unitary(U), tol)
        if found is None or not found.allclose(U, tol):
            false_negatives += 1
        witness = transitivity_witness(Z)
        if stabilizer_test(witness @ embed_unitary(U), tol) is not None:
            false_positives += 1
        result.record("transitivity", _relative(mobius(witness, base).Z, Z.Z), tol)

        chart = grassmann_act(M1, chart_point(Z)).chart()
        if chart is not None:
            result.record("grassmann_chart", _relative(chart, mobius(M1, Z).Z), tol)
        if i < FD_POINTS:
            result.record("density_invariance", density_invariance_residual(M1, Z), FD_TOL)
    result.record("stabilizer_false_negatives", false_negatives, EXACT)
    result.record("stabilizer_false_positives", false_positives, EXACT)
    return result


def _cover_soundness(
    n: int, config: Config, rng: np.random.Generator, result: CheckResult
) -> None:
    tag = f"n{n}"
    tol = config.tau_cov
    centers = center_elements(n, (-1.0, 1.0))
    product = CoverElement.identity(n)
    for step in range(config.samples):
        g1, g2, g3 = (random_cover_element(n, rng) for _ in range(3))
        if step % PRODUCT_CHAIN == 0:
            product = CoverElement.identity(n)
        product = cover_mul(product, g1)
        result.record(f"{tag}.product_invariant", product.invariant_residual(), tol)

        left = cover_mul(cover_mul(g1, g2), g3)
        right = cover_mul(g1, cover_mul(g2, g3))
        result.record(f"{tag}.associativity", abs(left.w - right.w), ASSOCIATIVITY_TOL)
        result.record(f"{tag}.inverse", abs(cover_mul(g1, cover_inverse(g1)).w), tol)

        for z in centers:
            exact = multiply_central(g1, z).w
            zg = cover_mul(z.as_cover(), g1).w
            gz = cover_mul(g1, z.as_cover()).w
            result.record(f"{tag}.centrality", max(abs(zg - exact), abs(gz - exact)), tol)

        S = random_special_unitary(n, rng)
        a = float(rng.uniform(-math.pi, math.pi))
        unitary = cover_mul(scalar_lift(a, n), su_lift(S))
        a_back, s_back = factor_unitary_lift(unitary)
        rebuilt = cover_mul(scalar_lift(a_back, n), su_lift(s_back))
        result.record(f"{tag}.unitary_factorization", abs(rebuilt.w - unitary.w), tol)

        b = float(rng.uniform(-math.pi, math.pi))
        combined = cover_mul(scalar_lift(a, n), scalar_lift(b, n)).w
        result.record(f"{tag}.scalar_homomorphism", abs(combined - scalar_lift(a + b, n).w), tol)

    if n % 2:
        generator = CenterElement(n, -1, Fraction(1, 2))
        expected = CenterElement(n, 1, Fraction(1))
    else:
        generator = CenterElement(n, -1, Fraction(0))
        expected = CenterElement(n, 1, Fraction(0))
    result.record_flag(f"{tag}.center_relation", generator * generator == expected)
    tracked = cover_mul(generator.as_cover(), generator.as_cover())
    result.record(f"{tag}.center_relation_tracked", abs(tracked.w - float(expected.k)), tol)


def check_cover_soundness(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("cover_soundness")
    for n in COVER_DIMENSIONS:
        _cover_soundness(n, config, rng, result)
    return result


def check_exact_sequence(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("exact_sequence")
    n, exponent = config.n, config.fiber_exponent
    centers = center_elements(n, (-1.0, 1.0))
    identity = CoverElement.identity(n)
    kernel_misses = 0
    for _ in range(config.samples):
        e1 = ext_make(random_cover_element(n, rng), float(rng.uniform(-2.0, 2.0)), exponent)
        e2 = ext_make(random_cover_element(n, rng), float(rng.uniform(-2.0, 2.0)), exponent)
        r = float(rng.uniform(-3.0, 3.0))
        fiber = ext_make(identity, r, exponent)

        # fiber-only elements lie in ker eta, and kernel elements are fiber-only
        if not eta(fiber).is_identity(config.tau_sym):
            kernel_misses += 1
        if eta(e1).is_identity(config.tau_sym):
            kernel_misses += 1
        z = centers[int(rng.integers(len(centers)))]
        central = ext_make(z.as_cover(), r, exponent)
        as_fiber = ext_make(identity, r + iota(z, exponent), exponent)
        if not eta(central).is_identity(config.tau_sym):
            kernel_misses += 1
        if not central.is_close(as_fiber, config.tau_cov):
            kernel_misses += 1

        lhs = eta(ext_mul(e1, e2))
        rhs = eta(e1) @ eta(e2)
        a, b = lhs.matrix.entries, rhs.matrix.entries
        result.record("eta_homomorphism", min(_relative(a, b), _relative(a, -b)), config.tau_act)
        result.record_flag(
            "fiber_centrality", ext_mul(fiber, e1).is_close(ext_mul(e1, fiber), config.tau_act)
        )

        p = ModelPoint(random_siegel_point(n, rng), float(rng.uniform(-1.0, 1.0)))
        moved = bundle_projection(ext_act(e1, p)).Z
        expected_base = mobius(e1.g.matrix, p.Z).Z
        result.record("descended_action", _relative(moved, expected_base), config.tau_act)

        cls = ProjectiveSymplectic.of(random_symplectic(n, rng))
        result.record_flag("section", eta(section(cls, exponent)).allclose(cls, config.tau_sym))
    result.record("kernel_membership", kernel_misses, EXACT)

    for m in LATTICE_DIMENSIONS:
        result.record(f"lattice_index_n{m}", abs(fiber_lattice(m, exponent).index - m), EXACT)
    lattice = fiber_lattice(n, exponent)
    result.record("iota_generator", abs(iota(lattice.generator, exponent) - 1.0), EXACT)
    result.outputs = {"fiber_unit": str(lattice.unit), "index": lattice.index}
    return result


def check_extended_action(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("extended_action")
    n, exponent, tol = config.n, config.fiber_exponent, config.tau_act
    centers = center_elements(n, (-1.0, 1.0))
    base = ModelPoint.basepoint(n)
    stabilizer_misses = 0
    for _ in range(config.samples):
        g = random_cover_element(n, rng)
        r = float(rng.uniform(-2.0, 2.0))
        z = centers[int(rng.integers(len(centers)))]
        p = ModelPoint(random_siegel_point(n, rng), float(rng.uniform(-1.0, 1.0)))

        # (g z, r - iota(z)) and (g, r) act identically and share a normal form
        shifted = multiply_central(g, z)
        shift = iota(z, exponent)
        raw = act_pair(g, r, p, exponent)
        result.record(
            "representative_invariance",
            abs(raw.t - act_pair(shifted, r - shift, p, exponent).t),
            tol,
        )
        reduced = ext_make(g, r, exponent)
        result.record_flag(
            "normal_form", reduced.is_close(ext_make(shifted, r - shift, exponent), config.tau_cov)
        )

        other = ext_make(random_cover_element(n, rng), float(rng.uniform(-2.0, 2.0)), exponent)
        composed = ext_act(ext_mul(reduced, other), p)
        stepwise = ext_act(reduced, ext_act(other, p))
        result.record("action_law", abs(composed.t - stepwise.t), tol)
        result.record("action_law_base", _relative(composed.Z.Z, stepwise.Z.Z), tol)

        s = float(rng.uniform(-1.0, 1.0))
        translated = ext_act(reduced, ModelPoint(p.Z, p.t + s))
        result.record("fiber_equivariance", abs(translated.t - (raw.t + s)), tol)

        if not stabilizer_check(stabilizer_element(random_unitary(n, rng), exponent), tol):
            stabilizer_misses += 1
        b = rng.uniform(-1.0, 1.0, size=(n, n))
        if stabilizer_check(ext_make(lift(gen_N(0.5 * (b + b.T))), 0.0, exponent), tol):
            stabilizer_misses += 1

        witness = ext_transitivity_witness(p, exponent)
        reached = ext_act(witness, base)
        result.record("transitivity", max(_relative(reached.Z.Z, p.Z.Z), abs(reached.t - p.t)), tol)

        x = random_cover_element(n, rng)
        moved = model_point_of(cover_mul(cover_mul(g, x), fiber_scalar(r, n, exponent)), exponent)
        expected = act_pair(g, r, model_point_of(x, exponent), exponent)
        result.record("model_equivariance", abs(moved.t - expected.t), tol)
    result.record("stabilizer", stabilizer_misses, EXACT)
    result.record("identity_action", abs(ext_act(ext_identity(n, exponent), base).t), tol)

    # on the lift of U(n) the phase at iI is the cover coordinate itself
    unitary = lift(embed_unitary(random_unitary(n, rng)))
    unit = float(fiber_lattice(n, exponent).unit)
    anchored = fiber_phase(unitary, SiegelPoint.basepoint(n), exponent)
    result.record("anchor", abs(anchored - exponent * unitary.w / unit), config.tau_cov)

    # SU(n) lifts on sheet m fix iI and shift the basepoint fiber by -exponent m / unit
    m = int(rng.integers(-3, 4))
    winding = ext_act(winding_class(random_special_unitary(n, rng), m, exponent), base)
    result.record(
        "winding_class",
        max(_relative(winding.Z.Z, base.Z.Z), abs(winding.t + exponent * m / unit)),
        tol,
    )
    return result


def check_product_measure(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("product_measure")
    n = MEASURE_DIMENSION
    samples = config.measure_samples
    threshold = measure_threshold(samples)
    worst_stderr = 0.0
    for _ in range(MEASURE_ELEMENTS):
        M = random_generator_word(n, int(rng.integers(1, 4)), rng)
        box = MeasureBox.around(random_siegel_point(n, rng), MEASURE_HALF_WIDTH)
        details = measure_check_details(
            M, float(rng.uniform(-2.0, 2.0)), box, samples, rng, exponent=config.fiber_exponent
        )
        result.record("measure", details.residual, threshold)
        result.record("fiber_shift", details.fiber_shift_residual, config.tau_act)
        worst_stderr = max(worst_stderr, details.relative_standard_error)

    # RMS residual should drop by about 4 when the sample count grows 16-fold.
    box = MeasureBox.around(SiegelPoint.basepoint(n), MEASURE_HALF_WIDTH)
    M = random_generator_word(n, 2, rng)
    small = max(samples // (DECAY_SCALE * DECAY_FACTOR), 2)
    strata = box.strata_per_axis(small)
    rms = []
    for count in (small, small * DECAY_FACTOR):
        residuals = [
            measure_check_details(
                M, 0.0, box, count, rng, exponent=config.fiber_exponent, strata=strata
            ).residual
            for _ in range(DECAY_REPEATS)
        ]
        rms.append(math.sqrt(float(np.mean(np.square(residuals)))))
    ratio = rms[0] / rms[1] if rms[1] > 0 else math.inf
    low, high = DECAY_RATIO
    result.record("decay_ratio", 0.0 if low <= ratio <= high else 1.0, EXACT)
    result.outputs = {
        "decay_ratio": ratio,
        "decay_samples": [small, small * DECAY_FACTOR],
        "rms_large": rms[1],
        "rms_small": rms[0],
        "worst_relative_stderr": worst_stderr,
    }
    return result


def check_volume_pipeline(config: Config, rng: np.random.Generator) -> CheckResult:
    result = CheckResult("volume_pipeline")
    mismatches = 0
    for _ in range(config.samples):
        covolume = _random_fraction(rng, positive=True)
        euler = _random_fraction(rng)
        d = SeifertDescriptor(covolume, euler)
        if seifert_volume(d).volume != abs(covolume * euler):
            mismatches += 1
        if seifert_volume(SeifertDescriptor.from_psp(euler)).volume != abs(euler):
            mismatches += 1
        try:
            SeifertDescriptor(covolume + 1, euler, arises_from_psp=True)
            mismatches += 1
        except InvariantViolation:
            pass
        scale = _random_fraction(rng, positive=True)
        scaled = seifert_volume(SeifertDescriptor(covolume * scale, euler)).volume
        if scaled != scale * seifert_volume(d).volume:
            mismatches += 1
    first = SeifertDescriptor.from_psp(euler_char_sp(2))
    second = SeifertDescriptor.from_psp(euler_char_sp(1))
    if volume_ratio(first, second) != abs(euler_char_sp(2) / euler_char_sp(1)):
        mismatches += 1
    result.record("formula", mismatches, EXACT)
    return result


CHECKS: tuple[tuple[str, Callable[[Config, np.random.Generator], CheckResult]], ...] = (
    ("euler_characteristic", check_euler_characteristic),
    ("normal_bundle", check_normal_bundle),
    ("generator_coefficients", check_generator_coefficients),
    ("mobius_axioms", check_mobius_axioms),
    ("cover_soundness", check_cover_soundness),
    ("exact_sequence", check_exact_sequence),
    ("extended_action", check_extended_action),
    ("product_measure", check_product_measure),
    ("volume_pipeline", check_volume_pipeline),
)


def _run_check(
    counter: int, check: Callable[[Config, np.random.Generator], CheckResult], config: Config
) -> CheckResult:
    started = time.perf_counter()
    result = check(config, substream(config.seed, counter))
    logger.info(
        "suite check name=%s pass=%s elapsed=%.2fs",
        result.name,
        result.passed,
        time.perf_counter() - started,
    )
    for key, value in result.residuals.items():
        limit = result.thresholds[key]
        if limit > 0 and 0.5 * limit < value <= limit:
            logger.warning(
                "near-threshold residual check=%s key=%s value=%.3e limit=%.1e",
                result.name,
                key,
                value,
                limit,
            )
    return result


def run_suite(config: Config, names: list[str] | None = None) -> list[CheckResult]:
    """Run the battery (or the named subset) and return results sorted by name."""
    selected = [
        (counter, check)
        for counter, (name, check) in enumerate(CHECKS, start=1)
        if names is None or name in names
    ]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(_run_check, counter, check, config) for counter, check in selected]
        results = [future.result() for future in futures]
    return sorted(results, key=lambda r: r.name)
