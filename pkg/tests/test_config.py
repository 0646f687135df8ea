"""
Tests for config loading and validation.
"""

import json
from pathlib import Path

import pytest

from config import Config, build_config, load_config_file, substream
from errors import ConfigError


def test_defaults_when_no_file(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv("SIEGELKIT_CONFIG", str(tmp_path / "absent.json"))
    config, extras = build_config()
    assert config == Config()
    assert extras == {}


def test_file_values_then_overrides(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    path = tmp_path / "siegelkit.json"
    payload = {"n": 3, "samples": 7, "measure_check": {"r": 0.25}}
    path.write_text(json.dumps(payload), encoding="utf-8")
    monkeypatch.setenv("SIEGELKIT_CONFIG", str(path))

    config, extras = build_config(overrides={"samples": 11, "seed": None})
    assert config.n == 3
    assert config.samples == 11
    assert config.seed == 42
    assert extras == {"measure_check": {"r": 0.25}}


def test_explicit_missing_file_is_an_error(tmp_path: Path) -> None:
    with pytest.raises(ConfigError, match="not found"):
        load_config_file(tmp_path / "nope.json")


def test_unreadable_or_non_object_file(tmp_path: Path) -> None:
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="could not read"):
        load_config_file(broken)
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="JSON object"):
        load_config_file(listed)


@pytest.mark.parametrize(
    "overrides",
    [
        {"n": 0},
        {"tau_sym": 0.0},
        {"tau_act": -1e-8},
        {"fiber_exponent": 0},
        {"samples": 0},
        {"workers": 0},
        {"seed": -1},
    ],
)
def test_invalid_values_are_rejected(overrides: dict) -> None:
    with pytest.raises(ConfigError):
        Config().with_overrides(overrides)


def test_unknown_override_key() -> None:
    with pytest.raises(ConfigError, match="unknown config keys: bogus"):
        Config().with_overrides({"bogus": 1})


def test_substreams_are_reproducible_and_distinct() -> None:
    first = substream(42, 1).uniform(size=4)
    assert (first == substream(42, 1).uniform(size=4)).all()
    assert not (first == substream(42, 2).uniform(size=4)).all()
