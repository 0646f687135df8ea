"""
Pytest fixtures shared by the SiegelKit tests.

Purpose:
    Seeded generators, small random inputs and a CLI runner that captures the
    Report JSON.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
from typing import Any, Callable

import numpy as np
import pytest

from cli import run


@dataclass
class CliResult:
    code: int
    report: dict[str, Any] | None
    stderr: str


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def run_cli(
    capsys: pytest.CaptureFixture[str], monkeypatch: pytest.MonkeyPatch, tmp_path: Any
) -> Callable[..., CliResult]:
    """Run cli.run(argv) and parse stdout as a Report when present."""
    # keep a developer's siegelkit.json or SIEGELKIT_CONFIG out of the tests
    monkeypatch.setenv("SIEGELKIT_CONFIG", str(tmp_path / "absent.json"))

    def _run(*argv: str) -> CliResult:
        code = run(list(argv))
        captured = capsys.readouterr()
        report = json.loads(captured.out) if captured.out.strip() else None
        return CliResult(code=code, report=report, stderr=captured.err)

    return _run


def symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    b = rng.uniform(-scale, scale, size=(n, n))
    return 0.5 * (b + b.T)
