"""
Configuration helpers for SiegelKit.

Purpose:
    Holds the tolerances, sample sizes and seed shared by the CLI and the
    verification suite. Values come from built-in defaults, then an optional
    JSON file, then command-line flags.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
import json
import logging
import os
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "SIEGELKIT_CONFIG"
BASE_DIR = Path(__file__).resolve().parent
DEFAULT_CONFIG_PATH = BASE_DIR / "siegelkit.json"


def _resolve_config_path() -> Path:
    """Resolve the default config path, honoring the SIEGELKIT_CONFIG override."""
    env_path = (os.getenv(CONFIG_ENV_VAR) or "").strip()
    if env_path:
        return Path(env_path).expanduser()
    return DEFAULT_CONFIG_PATH


@dataclass(frozen=True)
class Config:
    n: int = 2
    tau_sym: float = 1e-9
    tau_act: float = 1e-8
    tau_cov: float = 1e-8
    fiber_exponent: int = 1
    seed: int = 42
    samples: int = 100
    measure_samples: int = 20000
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be a positive integer (got {self.n})")
        for name in ("tau_sym", "tau_act", "tau_cov"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(f"{name} must be positive (got {value})")
        if self.fiber_exponent == 0:
            raise ConfigError("fiber_exponent must be nonzero")
        if self.samples < 1 or self.measure_samples < 1:
            raise ConfigError("samples and measure_samples must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits (got {self.seed})")

    def with_overrides(self, overrides: Mapping[str, Any]) -> Config:
        """Return a copy with every non-None override applied."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        changes = {k: v for k, v in overrides.items() if v is not None}
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def load_config_file(path: Path | None) -> dict[str, Any]:
    """Read a JSON config file.

    An explicit path must exist. When no path is given the default location
    is tried and silently skipped if absent.
    """
    explicit = path is not None
    target = path if path is not None else _resolve_config_path()
    if not target.exists():
        if explicit:
            raise ConfigError(f"config file not found: {target}")
        return {}
    try:
        payload = json.loads(target.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"could not read config file {target}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config file {target} must contain a JSON object")
    logger.debug("config loaded path=%s keys=%s", target, sorted(payload))
    return payload


def build_config(
    path: Path | None = None, overrides: Mapping[str, Any] | None = None
) -> tuple[Config, dict[str, Any]]:
    """Merge defaults, file values and overrides.

    Returns the Config plus any extra (non-Config) sections of the file, such
    as the "measure_check" object.
    """
    payload = load_config_file(path)
    known = {f.name for f in fields(Config)}
    file_values = {k: v for k, v in payload.items() if k in known}
    extras = {k: v for k, v in payload.items() if k not in known}
    config = Config().with_overrides(file_values)
    if overrides:
        config = config.with_overrides(overrides)
    return config, extras


def substream(seed: int, counter: int) -> np.random.Generator:
    """Independent generator for one consumer, derived from (seed, counter)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(counter,)))
