"""
Sample input writer for the SiegelKit CLI.

Writes one seeded JSON file per input kind so every subcommand can be tried
with @path arguments, e.g.

    python -m scripts.sample_inputs --out-dir samples
    python cli.py act --matrix @samples/matrix.json --point @samples/point.json
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path
from typing import Any

import numpy as np

from central_extension import ModelPoint, SeifertDescriptor, ext_make
from codec import (
    complex_matrix_to_json,
    cover_to_json,
    descriptor_to_json,
    ext_to_json,
    matrix_to_json,
    model_point_to_json,
    siegel_to_json,
)
from config import Config, substream
from siegel_space import random_generator_word, random_siegel_point, vec1
from universal_cover import random_cover_element
from volume import euler_char_sp


def build_samples(n: int, seed: int) -> dict[str, Any]:
    rng = substream(seed, 0)
    matrix = random_generator_word(n, 3, rng)
    point = random_siegel_point(n, rng)
    left = random_cover_element(n, rng)
    right = random_cover_element(n, rng)
    if n == 2:
        vector = vec1()
    else:
        raw = rng.uniform(-1.0, 1.0, size=(n, n)) + 1j * rng.uniform(-1.0, 1.0, size=(n, n))
        vector = 0.5 * (raw + raw.T)
    measure_check = {"matrix": matrix_to_json(matrix), "r": 0.25, "half_width": 0.2}
    return {
        "matrix": matrix_to_json(matrix),
        "point": siegel_to_json(point),
        "vector": complex_matrix_to_json(np.asarray(vector)),
        "cover_left": cover_to_json(left),
        "cover_right": cover_to_json(right),
        "ext_left": ext_to_json(ext_make(left, float(rng.uniform(0.0, 1.0)))),
        "ext_right": ext_to_json(ext_make(right, float(rng.uniform(0.0, 1.0)))),
        "model_point": model_point_to_json(ModelPoint(point, float(rng.uniform(-1.0, 1.0)))),
        "descriptor": descriptor_to_json(SeifertDescriptor.from_psp(euler_char_sp(n))),
        "measure_check": measure_check,
        "siegelkit": {**Config(n=n, seed=seed).to_dict(), "measure_check": measure_check},
    }


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Write seeded sample inputs for the SiegelKit CLI."
    )
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path("samples"),
        help="Directory to write sample files into (default: ./samples).",
    )
    parser.add_argument("--n", type=int, default=2, help="Half-dimension n (default: 2).")
    parser.add_argument("--seed", type=int, default=42, help="Seed (default: 42).")
    args = parser.parse_args()

    out_dir: Path = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, payload in build_samples(args.n, args.seed).items():
        dest = out_dir / f"{name}.json"
        dest.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(str(dest))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
