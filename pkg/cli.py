"""
Command-line entry point for SiegelKit.

Purpose:
    One argparse subcommand per operation family. Every run prints a single
    Report (command, inputs, outputs, residuals, thresholds, pass) as
    sorted-key JSON on stdout; diagnostics go to stderr.

Exit codes:
    0 report passed, 1 report failed (residual over threshold or failing
    suite check), 2 usage or configuration error, 3 unparseable JSON input,
    4 invalid input or numeric failure.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
import json
import logging
from pathlib import Path
import sys
from typing import Any, Callable, Sequence

import numpy as np

from central_extension import (
    ModelPoint,
    bundle_projection,
    eta,
    ext_act,
    ext_mul,
    fiber_lattice,
)
from codec import (
    center_to_json,
    complex_matrix_from_json,
    complex_matrix_to_json,
    complex_to_json,
    cover_from_json,
    cover_to_json,
    descriptor_from_json,
    descriptor_to_json,
    ext_from_json,
    ext_to_json,
    load_json_argument,
    matrix_from_json,
    matrix_to_json,
    model_point_from_json,
    model_point_to_json,
    projective_to_json,
    rational_to_json,
    real_matrix_from_json,
    siegel_from_json,
    siegel_to_json,
)
from config import Config, build_config, substream
from errors import ConfigError, DimensionError, ParseError, SiegelKitError
from siegel_space import (
    SiegelPoint,
    TangentVector,
    automorphy_factor,
    chart_point,
    grassmann_act,
    mobius,
    normal_bundle_check,
    pushforward,
    pushforward_fd,
    random_generator_word,
)
from suite import CHECKS, run_suite
from symplectic_core import symplectic_residual
from universal_cover import center_elements, cover_mul, lift
from volume import (
    MeasureBox,
    euler_char_sp,
    measure_check_details,
    measure_threshold,
    seifert_volume,
    zeta_neg,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INVALID = 4

FD_TOL = 1e-4
DEFAULT_CENTER_RANGE = (-2.0, 2.0)
MEASURE_ELEMENT_STREAM = 100
MEASURE_SAMPLE_STREAM = 101
MEASURE_WORD_LENGTH = 3
MEASURE_DEFAULTS: dict[str, Any] = {"r": 0.5, "half_width": 0.2, "jacobian": "pushforward"}
MEASURE_KEYS = {"matrix", "r", "box", "center", "half_width", "samples", "jacobian"}
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass
class Report:
    command: str
    inputs: dict[str, Any] = field(default_factory=dict)
    outputs: dict[str, Any] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    thresholds: dict[str, float] = field(default_factory=dict)
    failed: bool = False

    def check(self, key: str, residual: float, threshold: float) -> None:
        self.residuals[key] = float(residual)
        self.thresholds[key] = float(threshold)

    def fail(self, exc: Exception) -> None:
        self.failed = True
        self.outputs = {"error": {"message": str(exc), "type": type(exc).__name__}}

    @property
    def passed(self) -> bool:
        if self.failed:
            return False
        return all(self.residuals[k] <= self.thresholds[k] for k in self.residuals)

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "pass": self.passed,
            "residuals": self.residuals,
            "thresholds": self.thresholds,
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def _json_input(report: Report, key: str, raw: str) -> Any:
    """Parse a JSON flag and echo it into the report inputs."""
    value = load_json_argument(raw)
    report.inputs[key] = value
    return value


def _require_same_n(*sizes: int) -> int:
    if len(set(sizes)) != 1:
        raise DimensionError(f"inputs disagree on n: {sorted(set(sizes))}")
    return sizes[0]


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(b))))


Handler = Callable[[argparse.Namespace, Config, dict[str, Any], Report], None]


def cmd_verify_symplectic(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    matrix = real_matrix_from_json(_json_input(report, "matrix", args.matrix))
    residual = symplectic_residual(matrix)
    report.outputs = {"symplectic": residual <= config.tau_sym}
    report.check("symplectic", residual, config.tau_sym)


def cmd_act(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    M = matrix_from_json(_json_input(report, "matrix", args.matrix), config.tau_sym)
    Z = siegel_from_json(_json_input(report, "point", args.point))
    _require_same_n(M.n, Z.n)
    image = mobius(M, Z, config.tau_act)
    report.outputs = {"point": siegel_to_json(image)}
    chart = grassmann_act(M, chart_point(Z)).chart()
    if chart is not None:
        report.check("grassmann_chart", _relative(chart, image.Z), config.tau_act)


def cmd_pushforward(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    M = matrix_from_json(_json_input(report, "matrix", args.matrix), config.tau_sym)
    Z = siegel_from_json(_json_input(report, "point", args.point))
    V = complex_matrix_from_json(_json_input(report, "vector", args.vector))
    _require_same_n(M.n, Z.n)
    tangent = TangentVector(V, Z)
    image = pushforward(M, tangent)
    report.outputs = {
        "point": siegel_to_json(image.base),
        "vector": complex_matrix_to_json(image.V),
    }
    report.check("finite_difference", _relative(pushforward_fd(M, tangent), image.V), FD_TOL)


def cmd_check_normal_bundle(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    M = matrix_from_json(_json_input(report, "matrix", args.matrix), config.tau_sym)
    Z = siegel_from_json(_json_input(report, "point", args.point))
    _require_same_n(M.n, Z.n)
    coefficient, remainder = normal_bundle_check(M, Z)
    expected = 1.0 / automorphy_factor(M, Z)
    report.outputs = {
        "coefficient": complex_to_json(coefficient),
        "expected": complex_to_json(expected),
    }
    report.check("off_span", remainder / (abs(coefficient) * np.sqrt(2.0)), config.tau_act)
    report.check("coefficient", abs(coefficient - expected) / abs(expected), config.tau_act)


def cmd_lift(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    g = lift(matrix_from_json(_json_input(report, "matrix", args.matrix), config.tau_sym))
    report.outputs = {"element": cover_to_json(g)}
    report.check("cover_invariant", g.invariant_residual(), config.tau_cov)


def cmd_cover_mul(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    g1 = cover_from_json(
        _json_input(report, "left", args.left), config.tau_cov, sym_tol=config.tau_sym
    )
    g2 = cover_from_json(
        _json_input(report, "right", args.right), config.tau_cov, sym_tol=config.tau_sym
    )
    _require_same_n(g1.n, g2.n)
    product = cover_mul(g1, g2)
    report.outputs = {"element": cover_to_json(product)}
    report.check("cover_invariant", product.invariant_residual(), config.tau_cov)


def cmd_center(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    low, high = args.range
    report.inputs["range"] = [low, high]
    lattice = fiber_lattice(config.n, config.fiber_exponent)
    elements = []
    for z in center_elements(config.n, (low, high)):
        entry = center_to_json(z)
        entry["iota"] = rational_to_json(lattice.iota(z))
        elements.append(entry)
    report.outputs = {
        "elements": elements,
        "fiber_lattice": {
            "generator": center_to_json(lattice.generator),
            "index": lattice.index,
            "unit": rational_to_json(lattice.unit),
        },
    }


def cmd_ext_mul(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    exponent = config.fiber_exponent
    e1 = ext_from_json(
        _json_input(report, "left", args.left), exponent, config.tau_cov, sym_tol=config.tau_sym
    )
    e2 = ext_from_json(
        _json_input(report, "right", args.right), exponent, config.tau_cov, sym_tol=config.tau_sym
    )
    _require_same_n(e1.n, e2.n)
    product = ext_mul(e1, e2)
    report.outputs = {"element": ext_to_json(product)}
    report.check("cover_invariant", product.g.invariant_residual(), config.tau_cov)


def cmd_ext_act(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    raw = _json_input(report, "element", args.element)
    e = ext_from_json(raw, config.fiber_exponent, config.tau_cov, sym_tol=config.tau_sym)
    p = model_point_from_json(_json_input(report, "point", args.point))
    _require_same_n(e.n, p.n)
    image = ext_act(e, p)
    report.outputs = {"point": model_point_to_json(image)}
    shifted = ext_act(e, ModelPoint(p.Z, p.t + 1.0))
    report.check("fiber_equivariance", abs(shifted.t - image.t - 1.0), config.tau_act)


def cmd_eta(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    raw = _json_input(report, "element", args.element)
    e = ext_from_json(raw, config.fiber_exponent, config.tau_cov, sym_tol=config.tau_sym)
    report.outputs = {"class": projective_to_json(eta(e))}


def cmd_project(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    p = model_point_from_json(_json_input(report, "point", args.point))
    report.outputs = {"point": siegel_to_json(bundle_projection(p))}


def cmd_euler_char(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    report.outputs = {
        "chi": rational_to_json(euler_char_sp(config.n)),
        "zeta_values": [rational_to_json(zeta_neg(k)) for k in range(1, config.n + 1)],
    }


def cmd_volume(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    descriptor = descriptor_from_json(_json_input(report, "descriptor", args.descriptor))
    result = seifert_volume(descriptor)
    report.outputs = {
        "descriptor": descriptor_to_json(descriptor),
        "sign_convention_applied": result.sign_convention_applied,
        "signed_volume": rational_to_json(result.signed_volume),
        "volume": rational_to_json(result.volume),
    }


def _measure_params(
    args: argparse.Namespace, extras: dict[str, Any], report: Report
) -> dict[str, Any]:
    params = dict(MEASURE_DEFAULTS)
    from_file = extras.get("measure_check", {})
    if not isinstance(from_file, dict):
        raise ParseError("config file 'measure_check' must be a JSON object")
    params.update(from_file)
    if args.check is not None:
        inline = _json_input(report, "check", args.check)
        if not isinstance(inline, dict):
            raise ParseError("--check must be a JSON object")
        params.update(inline)
    unknown = sorted(set(params) - MEASURE_KEYS)
    if unknown:
        raise ParseError(f"unknown measure-check keys: {', '.join(unknown)}")
    if args.jacobian is not None:
        params["jacobian"] = args.jacobian
    if params["jacobian"] not in ("pushforward", "finite-difference"):
        raise ParseError(f"unknown jacobian method '{params['jacobian']}'")
    return params


def _measure_box(params: dict[str, Any], n: int) -> MeasureBox:
    box = params.get("box")
    if box is not None:
        try:
            fiber = box.get("fiber", [0.0, 1.0])
            return MeasureBox(
                np.array(box["low"], dtype=float),
                np.array(box["high"], dtype=float),
                float(fiber[0]),
                float(fiber[1]),
            )
        except (AttributeError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise ParseError(f"measure box needs numeric low, high and fiber: {exc}") from exc
    center = siegel_from_json(params["center"]) if "center" in params else SiegelPoint.basepoint(n)
    try:
        half_width = float(params["half_width"])
    except (TypeError, ValueError) as exc:
        raise ParseError("half_width must be a number") from exc
    return MeasureBox.around(center, half_width)


def cmd_measure_check(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    params = _measure_params(args, extras, report)
    report.inputs["measure_check"] = params
    if "matrix" in params:
        M = matrix_from_json(params["matrix"], config.tau_sym)
    else:
        element_rng = substream(config.seed, MEASURE_ELEMENT_STREAM)
        M = random_generator_word(config.n, MEASURE_WORD_LENGTH, element_rng)
    box = _measure_box(params, M.n)
    _require_same_n(M.n, box.n)
    try:
        r = float(params["r"])
        samples = int(params.get("samples", config.measure_samples))
    except (TypeError, ValueError) as exc:
        raise ParseError("r and samples must be numbers") from exc

    details = measure_check_details(
        M,
        r,
        box,
        samples,
        substream(config.seed, MEASURE_SAMPLE_STREAM),
        exponent=config.fiber_exponent,
        jacobian=params["jacobian"],
    )
    report.outputs = {
        "inside_fraction": details.inside_fraction,
        "matrix": matrix_to_json(M),
        "measure_box": details.measure_box,
        "measure_preimage": details.measure_preimage,
        "relative_standard_error": details.relative_standard_error,
        "samples": details.samples,
        "strata_per_axis": details.strata,
    }
    report.check("measure", details.residual, measure_threshold(samples))
    report.check("fiber_shift", details.fiber_shift_residual, config.tau_act)


def cmd_suite(
    args: argparse.Namespace, config: Config, extras: dict[str, Any], report: Report
) -> None:
    if args.only:
        report.inputs["only"] = sorted(args.only)
    results = run_suite(config, args.only or None)
    report.outputs = {"checks": {r.name: r.to_dict() for r in results}}
    for r in results:
        for key, value in r.residuals.items():
            report.check(f"{r.name}.{key}", value, r.thresholds[key])


def _parse_range(text: str) -> tuple[float, float]:
    low, sep, high = text.partition("..")
    try:
        if not sep:
            raise ValueError(text)
        bounds = float(low), float(high)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a range like -2..2, got '{text}'") from exc
    if bounds[0] > bounds[1]:
        raise argparse.ArgumentTypeError(f"empty range '{text}'")
    return bounds


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("configuration")
    group.add_argument("--n", type=int, default=None, help="Half-dimension n (default 2).")
    group.add_argument("--tau-sym", type=float, default=None, help="Symplecticity tolerance.")
    group.add_argument("--tau-act", type=float, default=None, help="Action tolerance.")
    group.add_argument("--tau-cov", type=float, default=None, help="Cover invariant tolerance.")
    group.add_argument("--fiber-exponent", type=int, default=None, help="Fiber rotation exponent.")
    group.add_argument("--seed", type=int, default=None, help="Seed for every random substream.")
    group.add_argument("--samples", type=int, default=None, help="Samples per suite property.")
    group.add_argument(
        "--measure-samples", type=int, default=None, help="Monte-Carlo sample count."
    )
    group.add_argument("--workers", type=int, default=None, help="Suite worker threads.")
    group.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON config file (default: SIEGELKIT_CONFIG or siegelkit.json if present).",
    )
    group.add_argument("--out", type=Path, default=None, help="Also write the report to this path.")
    group.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="Log level for stderr diagnostics (default: WARNING).",
    )
    return common


COMMANDS: dict[str, tuple[Handler, str]] = {
    "verify-symplectic": (cmd_verify_symplectic, "Test M^T Omega M = Omega."),
    "act": (cmd_act, "Mobius action of a matrix on a Siegel point."),
    "pushforward": (cmd_pushforward, "Tangent map of the Mobius action."),
    "check-normal-bundle": (cmd_check_normal_bundle, "Normal-bundle coefficient for n = 2."),
    "lift": (cmd_lift, "Basepoint lift to the universal cover."),
    "cover-mul": (cmd_cover_mul, "Product in the universal cover."),
    "center": (cmd_center, "Enumerate center elements and their fiber coordinates."),
    "ext-mul": (cmd_ext_mul, "Product in the central extension."),
    "ext-act": (cmd_ext_act, "Action of the central extension on the model space."),
    "eta": (cmd_eta, "Projective class of an extension element."),
    "project": (cmd_project, "Bundle projection of a model point."),
    "euler-char": (cmd_euler_char, "Exact Euler characteristic of Sp(2n, Z)."),
    "volume": (cmd_volume, "Volume of a Seifert-like quotient from its descriptor."),
    "measure-check": (cmd_measure_check, "Monte-Carlo product-measure invariance."),
    "suite": (cmd_suite, "Run the verification battery."),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siegelkit", description="Symplectic group, Siegel space and volume toolkit."
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    parsers = {
        name: sub.add_parser(name, parents=[common], help=text, description=text)
        for name, (_, text) in COMMANDS.items()
    }
    json_help = "inline JSON or @path"
    for name in ("verify-symplectic", "act", "pushforward", "check-normal-bundle", "lift"):
        parsers[name].add_argument("--matrix", required=True, help=f"Matrix, {json_help}.")
    for name in ("act", "pushforward", "check-normal-bundle"):
        parsers[name].add_argument("--point", required=True, help=f"Siegel point, {json_help}.")
    parsers["pushforward"].add_argument(
        "--vector", required=True, help=f"Complex tangent vector, {json_help}."
    )
    for name, what in (("cover-mul", "Cover element"), ("ext-mul", "Extension element")):
        parsers[name].add_argument("--left", required=True, help=f"{what}, {json_help}.")
        parsers[name].add_argument("--right", required=True, help=f"{what}, {json_help}.")
    parsers["center"].add_argument(
        "--range", type=_parse_range, default=DEFAULT_CENTER_RANGE, help="Lift index range a..b."
    )
    for name in ("ext-act", "eta"):
        parsers[name].add_argument(
            "--element", required=True, help=f"Extension element, {json_help}."
        )
    for name in ("ext-act", "project"):
        parsers[name].add_argument("--point", required=True, help=f"Model point, {json_help}.")
    parsers["volume"].add_argument(
        "--descriptor", required=True, help=f"Seifert-like descriptor, {json_help}."
    )
    parsers["measure-check"].add_argument(
        "--check",
        default=None,
        help=f"Overrides for the config measure_check object, {json_help}.",
    )
    parsers["measure-check"].add_argument(
        "--jacobian", default=None, choices=("pushforward", "finite-difference")
    )
    parsers["suite"].add_argument(
        "--only",
        action="append",
        choices=[name for name, _ in CHECKS],
        help="Run only this check (repeatable).",
    )
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level), stream=sys.stderr, format=LOG_FORMAT, force=True
    )


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "n": args.n,
        "tau_sym": args.tau_sym,
        "tau_act": args.tau_act,
        "tau_cov": args.tau_cov,
        "fiber_exponent": args.fiber_exponent,
        "seed": args.seed,
        "samples": args.samples,
        "measure_samples": args.measure_samples,
        "workers": args.workers,
    }


def _emit(report: Report, out: Path | None) -> None:
    text = report.to_json()
    print(text)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    _configure_logging(args.log_level)

    try:
        config, extras = build_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    handler, _ = COMMANDS[args.command]
    report = Report(args.command, inputs={"config": config.to_dict()})
    logger.info("command start name=%s n=%d seed=%d", args.command, config.n, config.seed)
    try:
        handler(args, config, extras, report)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SiegelKitError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        report.fail(exc)
        _emit(report, args.out)
        return EXIT_INVALID

    _emit(report, args.out)
    logger.info("command finish name=%s pass=%s", args.command, report.passed)
    return EXIT_OK if report.passed else EXIT_FAILED


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    raise SystemExit(main())
