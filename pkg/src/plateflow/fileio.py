"""Deterministic readers and writers for field CSVs and summary JSON.

Field files carry one node per row in lexicographic order, coordinates first,
value last, all floats rendered with %.17g so a reload reproduces the exact
in-memory doubles.
"""

from __future__ import annotations

import json

import numpy as np

from .grid import Grid, interior_coordinates

FLOAT_FMT = "%.17g"


def _fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def field_header(dim: int) -> str:
    return "# " + ", ".join(["x", "y"][:dim] + ["value"])


def write_field_csv(path: str, grid: Grid, values: np.ndarray) -> None:
    """Write an interior field in lexicographic node order."""
    coords = interior_coordinates(grid)
    write_table_csv(path, grid.dim, coords, values)


def write_table_csv(path: str, dim: int, coords: np.ndarray, values: np.ndarray) -> None:
    lines = [field_header(dim)]
    for pt, val in zip(coords, values):
        lines.append(", ".join(_fmt(x) for x in pt) + ", " + _fmt(val))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read a field file back into (coords, values)."""
    coords = []
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [float(p) for p in line.split(",")]
            coords.append(parts[:-1])
            values.append(parts[-1])
    return np.asarray(coords, dtype=float), np.asarray(values, dtype=float)


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and obj != obj:  # NaN is not valid strict JSON
        return "nan"
    return obj


def write_json(path: str, payload: dict) -> None:
    text = json.dumps(jsonable(payload), indent=2, sort_keys=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
