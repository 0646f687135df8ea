"""
Exception types for SiegelKit.

Purpose:
    One hierarchy for every failure the library can report, so the CLI can
    map them onto exit codes without string matching.
"""

from __future__ import annotations


class SiegelKitError(Exception):
    """Base class for all library errors."""


class DimensionError(SiegelKitError, ValueError):
    """Matrix has the wrong (e.g. odd) dimension."""


class UnsupportedDimensionError(DimensionError):
    """Operation only exists for a specific n."""


class ShapeError(SiegelKitError, ValueError):
    """Input has the right size but the wrong structure (e.g. not symmetric)."""


class InvertibilityError(SiegelKitError, ValueError):
    pass


class InvariantViolation(SiegelKitError, ValueError):
    """A value failed the invariant of the type it claims to be."""


class DomainError(SiegelKitError, ValueError):
    pass


class ConfigError(SiegelKitError, ValueError):
    pass


class ParseError(SiegelKitError, ValueError):
    """JSON input could not be decoded into the requested type."""


class NumericError(SiegelKitError, RuntimeError):
    """An iterative or tracked computation did not meet its tolerance."""

    def __init__(self, message: str, *, residual: float | None = None) -> None:
        super().__init__(message)
        self.residual = residual


class ConditioningError(NumericError):
    pass
