"""
JSON wire formats for SiegelKit.

Purpose:
    Encode/decode every value type the CLI reads or writes. Structural
    problems (bad JSON, missing keys, non-numeric rows) raise ParseError;
    mathematically invalid values raise the value type's own error.

Formats:
    matrix        {"n": int, "rows": [[float, ...], ...]}        (2n x 2n real)
    complex mat   {"re": rows, "im": rows}
    Siegel point  {"n": int, "X": rows, "Y": rows}
    cover element {"matrix": <matrix>, "w": float}
    ext element   {"g": <cover element>, "r": float}
    model point   {"Z": <Siegel point>, "t": float}
    rationals     "p/q" strings
"""

from __future__ import annotations

from fractions import Fraction
import json
from pathlib import Path
from typing import Any

import numpy as np

from central_extension import (
    DEFAULT_EXPONENT,
    ExtElement,
    ModelPoint,
    ProjectiveSymplectic,
    SeifertDescriptor,
    ext_make,
)
from errors import ParseError
from siegel_space import SiegelPoint
from symplectic_core import DEFAULT_TAU_SYM, RealArray, SymplecticMatrix
from universal_cover import DEFAULT_TAU_COV, CenterElement, CoverElement


def load_json_argument(text: str) -> Any:
    """Parse an inline JSON argument, or read it from a file when given as @path."""
    source = "argument"
    if text.startswith("@"):
        path = Path(text[1:])
        source = str(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"could not read JSON file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {source}: {exc}") from exc


def _field(obj: Any, key: str, what: str) -> Any:
    if not isinstance(obj, dict):
        raise ParseError(f"{what} must be a JSON object")
    if key not in obj:
        raise ParseError(f"{what} is missing the '{key}' field")
    return obj[key]


def _rows(value: Any, what: str) -> RealArray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what} rows must be numbers") from exc
    if arr.ndim != 2:
        raise ParseError(f"{what} rows must form a 2-d array")
    return arr


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what} must be a number")
    return float(value)


def real_matrix_from_json(obj: Any) -> RealArray:
    n = _field(obj, "n", "matrix")
    arr = _rows(_field(obj, "rows", "matrix"), "matrix")
    if not isinstance(n, int) or arr.shape != (2 * n, 2 * n):
        raise ParseError(f"matrix rows have shape {arr.shape}, expected 2n x 2n with n = {n}")
    return arr


def matrix_from_json(obj: Any, tol: float = DEFAULT_TAU_SYM) -> SymplecticMatrix:
    return SymplecticMatrix.checked(real_matrix_from_json(obj), tol)


def matrix_to_json(M: SymplecticMatrix) -> dict[str, Any]:
    return {"n": M.n, "rows": M.entries.tolist()}


def complex_matrix_from_json(obj: Any) -> np.ndarray:
    re = _rows(_field(obj, "re", "complex matrix"), "complex matrix")
    im = _rows(_field(obj, "im", "complex matrix"), "complex matrix")
    if re.shape != im.shape:
        raise ParseError("real and imaginary parts have different shapes")
    return re + 1j * im


def complex_matrix_to_json(arr: np.ndarray) -> dict[str, Any]:
    return {"re": arr.real.tolist(), "im": arr.imag.tolist()}


def complex_to_json(z: complex) -> dict[str, float]:
    return {"re": float(z.real), "im": float(z.imag)}


def siegel_from_json(obj: Any) -> SiegelPoint:
    n = _field(obj, "n", "Siegel point")
    x = _rows(_field(obj, "X", "Siegel point"), "Siegel point X")
    y = _rows(_field(obj, "Y", "Siegel point"), "Siegel point Y")
    if not isinstance(n, int) or x.shape != (n, n) or y.shape != (n, n):
        raise ParseError(f"Siegel point blocks must be {n} x {n}")
    return SiegelPoint.from_parts(x, y)


def siegel_to_json(Z: SiegelPoint) -> dict[str, Any]:
    return {"n": Z.n, "X": Z.X.tolist(), "Y": Z.Y.tolist()}


def cover_from_json(
    obj: Any, tol: float = DEFAULT_TAU_COV, *, sym_tol: float = DEFAULT_TAU_SYM
) -> CoverElement:
    matrix = matrix_from_json(_field(obj, "matrix", "cover element"), sym_tol)
    w = _number(_field(obj, "w", "cover element"), "cover element w")
    return CoverElement(matrix, w).checked(tol)


def cover_to_json(g: CoverElement) -> dict[str, Any]:
    return {"matrix": matrix_to_json(g.matrix), "w": g.w}


def ext_from_json(
    obj: Any,
    exponent: int = DEFAULT_EXPONENT,
    tol: float = DEFAULT_TAU_COV,
    *,
    sym_tol: float = DEFAULT_TAU_SYM,
) -> ExtElement:
    g = cover_from_json(_field(obj, "g", "extension element"), tol, sym_tol=sym_tol)
    r = _number(_field(obj, "r", "extension element"), "extension element r")
    return ext_make(g, r, exponent)


def ext_to_json(e: ExtElement) -> dict[str, Any]:
    return {"g": cover_to_json(e.g), "r": e.r}


def model_point_from_json(obj: Any) -> ModelPoint:
    z = siegel_from_json(_field(obj, "Z", "model point"))
    return ModelPoint(z, _number(_field(obj, "t", "model point"), "model point t"))


def model_point_to_json(p: ModelPoint) -> dict[str, Any]:
    return {"Z": siegel_to_json(p.Z), "t": p.t}


def projective_to_json(c: ProjectiveSymplectic) -> dict[str, Any]:
    return matrix_to_json(c.matrix)


def center_to_json(z: CenterElement) -> dict[str, Any]:
    return {"n": z.n, "sign": z.sign, "k": rational_to_json(z.k)}


def rational_to_json(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def rational_from_json(value: Any, what: str = "rational") -> Fraction:
    if isinstance(value, bool):
        raise ParseError(f"{what} must be an integer or a 'p/q' string")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"{what} '{value}' is not a rational number") from exc
    raise ParseError(f"{what} must be an integer or a 'p/q' string")


def descriptor_from_json(obj: Any) -> SeifertDescriptor:
    arises = obj.get("arises_from_psp", False) if isinstance(obj, dict) else False
    if not isinstance(arises, bool):
        raise ParseError("arises_from_psp must be a boolean")
    euler = rational_from_json(_field(obj, "base_euler", "descriptor"), "base_euler")
    if arises and "fiber_covolume" not in obj:
        return SeifertDescriptor.from_psp(euler)
    covolume = rational_from_json(_field(obj, "fiber_covolume", "descriptor"), "fiber_covolume")
    return SeifertDescriptor(covolume, euler, arises)


def descriptor_to_json(d: SeifertDescriptor) -> dict[str, Any]:
    return {
        "arises_from_psp": d.arises_from_psp,
        "base_euler": rational_to_json(d.base_euler),
        "fiber_covolume": rational_to_json(d.fiber_covolume),
    }
