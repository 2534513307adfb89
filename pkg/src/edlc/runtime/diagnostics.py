"""Deterministic reductions, CSV diagnostics and binary snapshots."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from edlc.errors import UnknownFunction
from edlc.runtime.grid import StateVector

REDUCTIONS = ("L2", "Linf", "sum")


def reduce(state: StateVector, gf: str, which: str = "L2") -> float:
    """Interior reduction using numpy's pairwise summation over a contiguous copy.

    The summation tree depends only on the interior size, never on tiling or
    worker count, so results are reproducible bit for bit.
    """
    if gf not in state:
        raise UnknownFunction(f"unknown grid function {gf!r}")
    f = np.ascontiguousarray(state.interior(gf)).ravel()
    h = state.grid.cell_volume
    if which == "L2":
        return math.sqrt(h * float(np.sum(f * f)))
    if which == "Linf":
        return float(np.max(np.abs(f))) if f.size else 0.0
    if which == "sum":
        return h * float(np.sum(f))
    raise ValueError(f"unknown reduction {which!r}; expected one of {', '.join(REDUCTIONS)}")


def csv_header(functions: list[str], energy: bool) -> list[str]:
    cols = ["t"]
    for gf in functions:
        cols += [f"{gf}_L2", f"{gf}_Linf"]
    if energy:
        cols.append("energy")
    return cols


def format_csv(records: list[dict[str, float]], columns: list[str]) -> str:
    lines = [",".join(columns)]
    for rec in records:
        lines.append(",".join(repr(float(rec[c])) for c in columns))
    return "\n".join(lines) + "\n"


def write_snapshot(path, state: StateVector, functions: list[str], t: float) -> tuple[Path, Path]:
    """Interior values as row-major little-endian float64, one function after another, plus a text header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = state.grid
    with open(path.with_suffix(".bin"), "wb") as fh:
        for gf in functions:
            np.ascontiguousarray(state.interior(gf), dtype="<f8").tofile(fh)
    header = [
        f"dim: {grid.dim}",
        f"extents: {' '.join(map(str, grid.extents))}",
        f"spacing: {' '.join(repr(h) for h in grid.spacing)}",
        f"origin: {' '.join(repr(o) for o in grid.origin)}",
        f"time: {t!r}",
        "dtype: float64 little-endian, row-major, interior only",
        f"functions: {' '.join(functions)}",
    ]
    path.with_suffix(".txt").write_text("\n".join(header) + "\n", encoding="utf-8")
    return path.with_suffix(".bin"), path.with_suffix(".txt")


def read_snapshot(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    path = Path(path)
    meta = {}
    for line in path.with_suffix(".txt").read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition(": ")
        meta[key] = value
    extents = tuple(int(v) for v in meta["extents"].split())
    raw = np.fromfile(path.with_suffix(".bin"), dtype="<f8")
    names = meta["functions"].split()
    size = int(np.prod(extents))
    return meta, {n: raw[i * size:(i + 1) * size].reshape(extents) for i, n in enumerate(names)}
