"""
End-to-end tests for the siegelkit CLI.

Purpose:
    Drive cli.run() in-process and check the Report JSON and exit codes.
"""

import json
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from codec import cover_to_json, matrix_to_json, siegel_to_json
from siegel_space import SiegelPoint
from symplectic_core import SymplecticMatrix, embed_unitary, omega
from tests.conftest import CliResult
from universal_cover import lift

Runner = Callable[..., CliResult]

POINT = json.dumps({"n": 2, "X": [[0.1, 0.2], [0.2, -0.3]], "Y": [[1.5, 0.1], [0.1, 0.8]]})


def _matrix(M: SymplecticMatrix) -> str:
    return json.dumps(matrix_to_json(M))


def test_euler_char_report(run_cli: Runner) -> None:
    result = run_cli("euler-char", "--n", "2")
    assert result.code == 0
    assert result.report is not None
    assert result.report["command"] == "euler-char"
    assert result.report["outputs"] == {"chi": "-1/1440", "zeta_values": ["-1/12", "1/120"]}
    assert result.report["pass"] is True
    assert result.report["inputs"]["config"]["n"] == 2


def test_act_with_identity_echoes_point(run_cli: Runner) -> None:
    result = run_cli(
        "act", "--matrix", _matrix(SymplecticMatrix.identity(2)), "--point", POINT
    )
    assert result.code == 0
    assert result.report is not None
    point = result.report["outputs"]["point"]
    expected = json.loads(POINT)
    assert np.allclose(point["X"], expected["X"]) and np.allclose(point["Y"], expected["Y"])
    assert result.report["residuals"]["grassmann_chart"] < 1e-12
    assert result.report["inputs"]["point"] == expected


def test_act_with_omega_at_basepoint(run_cli: Runner) -> None:
    base = json.dumps(siegel_to_json(SiegelPoint.basepoint(2)))
    result = run_cli("act", "--matrix", _matrix(omega(2)), "--point", base)
    assert result.code == 0
    assert np.allclose(result.report["outputs"]["point"]["Y"], np.eye(2))


def test_verify_symplectic_failure_exits_one(run_cli: Runner) -> None:
    doubled = json.dumps({"n": 1, "rows": [[2.0, 0.0], [0.0, 2.0]]})
    result = run_cli("verify-symplectic", "--matrix", doubled)
    assert result.code == 1
    assert result.report["pass"] is False
    assert result.report["outputs"] == {"symplectic": False}
    assert result.report["residuals"]["symplectic"] == pytest.approx(3.0)


def test_lift_and_cover_mul(run_cli: Runner) -> None:
    rotation = embed_unitary(np.diag([1j, 1.0]))
    lifted = run_cli("lift", "--matrix", _matrix(rotation))
    assert lifted.code == 0
    assert lifted.report["outputs"]["element"]["w"] == pytest.approx(0.25)

    g = json.dumps(cover_to_json(lift(rotation)))
    product = run_cli("cover-mul", "--left", g, "--right", g)
    assert product.code == 0
    assert product.report["outputs"]["element"]["w"] == pytest.approx(0.5)


def test_center_listing(run_cli: Runner) -> None:
    result = run_cli("center", "--n", "3", "--range=-1..1")
    assert result.code == 0
    outputs = result.report["outputs"]
    assert [(e["sign"], e["k"], e["iota"]) for e in outputs["elements"]] == [
        (1, "-1/1", "2/1"),
        (-1, "-1/2", "1/1"),
        (1, "0/1", "0/1"),
        (-1, "1/2", "-1/1"),
        (1, "1/1", "-2/1"),
    ]
    assert outputs["fiber_lattice"]["index"] == 3
    assert outputs["fiber_lattice"]["unit"] == "1/2"


def test_ext_act_and_project(run_cli: Runner) -> None:
    identity = {"matrix": matrix_to_json(SymplecticMatrix.identity(2)), "w": 0.0}
    element = json.dumps({"g": identity, "r": 0.25})
    point = json.dumps({"Z": json.loads(POINT), "t": 0.5})
    result = run_cli("ext-act", "--element", element, "--point", point)
    assert result.code == 0
    assert result.report["outputs"]["point"]["t"] == pytest.approx(0.75)
    projected = run_cli("project", "--point", point)
    assert projected.report["outputs"]["point"]["Y"] == json.loads(POINT)["Y"]


def test_volume_report(run_cli: Runner) -> None:
    descriptor = json.dumps({"fiber_covolume": "3/2", "base_euler": -2})
    result = run_cli("volume", "--descriptor", descriptor)
    assert result.code == 0
    assert result.report["outputs"]["volume"] == "3/1"
    assert result.report["outputs"]["signed_volume"] == "-3/1"
    assert result.report["outputs"]["sign_convention_applied"] is True


def test_json_from_file_argument(run_cli: Runner, tmp_path: Path) -> None:
    path = tmp_path / "descriptor.json"
    path.write_text(json.dumps({"arises_from_psp": True, "base_euler": "-1/1440"}))
    result = run_cli("volume", "--descriptor", f"@{path}")
    assert result.code == 0
    assert result.report["outputs"]["volume"] == "1/1440"


@pytest.mark.parametrize(
    "argv",
    [
        ("no-such-command",),
        ("act", "--point", POINT),
        ("center", "--range", "3..1"),
        ("center", "--range", "nonsense"),
        ("euler-char", "--n", "0"),
        ("euler-char", "--config", "/nonexistent/siegelkit.json"),
    ],
)
def test_usage_errors_exit_two(run_cli: Runner, argv: tuple[str, ...]) -> None:
    result = run_cli(*argv)
    assert result.code == 2
    assert result.report is None


def test_unparseable_input_exits_three(run_cli: Runner) -> None:
    result = run_cli("lift", "--matrix", "{not json")
    assert result.code == 3
    assert result.report is None
    assert "parse error" in result.stderr


def test_invalid_input_exits_four_with_report(run_cli: Runner) -> None:
    doubled = json.dumps({"n": 1, "rows": [[2.0, 0.0], [0.0, 2.0]]})
    result = run_cli("lift", "--matrix", doubled)
    assert result.code == 4
    assert result.report["pass"] is False
    assert result.report["outputs"]["error"]["type"] == "InvariantViolation"

    mismatched = run_cli("act", "--matrix", _matrix(omega(1)), "--point", POINT)
    assert mismatched.code == 4
    assert mismatched.report["outputs"]["error"]["type"] == "DimensionError"


def test_measure_check_is_deterministic(run_cli: Runner, tmp_path: Path) -> None:
    out = tmp_path / "reports" / "measure.json"
    argv = ("measure-check", "--measure-samples", "2000", "--seed", "5")
    first = run_cli(*argv, "--out", str(out))
    second = run_cli(*argv)
    assert first.code == 0
    assert first.report == second.report
    assert json.loads(out.read_text()) == first.report
    assert first.report["inputs"]["measure_check"]["half_width"] == 0.2
    assert first.report["residuals"]["measure"] < first.report["thresholds"]["measure"]


def test_measure_check_reads_config_section(run_cli: Runner, tmp_path: Path) -> None:
    config = tmp_path / "siegelkit.json"
    config.write_text(
        json.dumps(
            {
                "n": 1,
                "measure_samples": 1500,
                "measure_check": {"matrix": matrix_to_json(omega(1)), "r": 0.1},
            }
        )
    )
    result = run_cli("measure-check", "--config", str(config), "--check", '{"half_width": 0.1}')
    assert result.code == 0
    assert result.report["outputs"]["samples"] == 1500
    assert result.report["inputs"]["measure_check"]["r"] == 0.1
    assert result.report["inputs"]["measure_check"]["half_width"] == 0.1

    bad = run_cli("measure-check", "--config", str(config), "--check", '{"bogus": 1}')
    assert bad.code == 3


def test_suite_subset(run_cli: Runner) -> None:
    result = run_cli(
        "suite", "--only", "volume_pipeline", "--only", "euler_characteristic", "--samples", "5"
    )
    assert result.code == 0
    checks = result.report["outputs"]["checks"]
    assert sorted(checks) == ["euler_characteristic", "volume_pipeline"]
    assert checks["euler_characteristic"]["outputs"]["chi_n2"] == "-1/1440"
    assert result.report["residuals"]["euler_characteristic.chi_n2"] == 0.0
    assert result.report["inputs"]["only"] == ["euler_characteristic", "volume_pipeline"]


def test_cover_inputs_follow_tau_sym(run_cli: Runner) -> None:
    near = json.dumps({"n": 1, "rows": [[1.0, 1e-7], [0.0, 1.0000001]]})
    lifted = run_cli("lift", "--matrix", near, "--tau-sym", "1e-5")
    assert lifted.code == 0
    g = json.dumps(lifted.report["outputs"]["element"])
    product = run_cli("cover-mul", "--left", g, "--right", g, "--tau-sym", "1e-5")
    assert product.code == 0
    element = json.dumps({"g": lifted.report["outputs"]["element"], "r": 0.25})
    assert run_cli("eta", "--element", element, "--tau-sym", "1e-5").code == 0

    strict = run_cli("cover-mul", "--left", g, "--right", g)
    assert strict.code == 4
    assert strict.report["outputs"]["error"]["type"] == "InvariantViolation"


def test_product_measure_suite_passes_at_default_size(run_cli: Runner) -> None:
    result = run_cli("suite", "--only", "product_measure", "--seed", "42", "--samples", "500")
    assert result.code == 0
    assert result.report["pass"] is True
    outputs = result.report["outputs"]["checks"]["product_measure"]["outputs"]
    assert outputs["decay_samples"] == [78, 1248]
    assert 2.0 <= outputs["decay_ratio"] <= 8.0
