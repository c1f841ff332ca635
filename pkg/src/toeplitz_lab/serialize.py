"""Byte-stable writers: CSV (17 significant digits), sorted JSON, plain PGM."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8", newline="\n")


def write_pgm(path: Path, values: np.ndarray, mask: np.ndarray, maxval: int = 65535) -> None:
    """Plain (P2) greyscale image.

    ``values`` is indexed (re, im); the image has the imaginary axis pointing
    up.  Masked values are scaled linearly onto [0, maxval]; other pixels are 0.
    """
    img = np.zeros(values.shape, dtype=np.int64)
    if mask.any():
        v = values[mask]
        lo, hi = float(v.min()), float(v.max())
        scaled = np.full(v.shape, maxval, dtype=np.int64) if hi <= lo else \
            np.rint((v - lo) / (hi - lo) * maxval).astype(np.int64)
        img[mask] = scaled
    img = img.T[::-1]  # rows: im from top to bottom; columns: re
    height, width = img.shape
    lines = ["P2", f"{width} {height}", str(maxval)]
    lines += [" ".join(str(int(p)) for p in row) for row in img]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
