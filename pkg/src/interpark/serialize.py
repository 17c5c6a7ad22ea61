"""File formats for cross-run and cross-implementation diffing.

Measures go to CSV (x,y,weight at 17 significant digits), grid measures
to a text header plus row-major weight matrix, heatmaps to ASCII PGM
(P2), plans to index triples.  Every writer is deterministic so repeated
runs produce bit-identical files.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .measures import DiscreteMeasure, GridSpec

__all__ = [
    "measure_to_csv",
    "measure_from_csv",
    "grid_measure_to_text",
    "grid_measure_from_text",
    "plan_to_csv",
    "matrix_to_csv",
    "write_pgm",
    "write_summary",
    "read_summary",
    "write_manifest",
]

_FMT = "{:.17g}"


def _g(x: float) -> str:
    return _FMT.format(float(x))


def measure_to_csv(measure: DiscreteMeasure, path) -> None:
    """Rows of x,y,weight; 1D supports get y = 0."""
    path = Path(path)
    pts = measure.points
    lines = ["x,y,weight"]
    for i in range(measure.n):
        x = pts[i, 0]
        y = pts[i, 1] if pts.shape[1] > 1 else 0.0
        lines.append(f"{_g(x)},{_g(y)},{_g(measure.weights[i])}")
    path.write_text("\n".join(lines) + "\n")


def measure_from_csv(path) -> DiscreteMeasure:
    path = Path(path)
    rows = path.read_text().strip().splitlines()
    if not rows or rows[0].strip() != "x,y,weight":
        raise ValueError(f"{path}: expected header 'x,y,weight'")
    pts = []
    w = []
    for line in rows[1:]:
        sx, sy, sw = line.split(",")
        pts.append((float(sx), float(sy)))
        w.append(float(sw))
    return DiscreteMeasure(np.array(pts), np.array(w))


def grid_measure_to_text(measure: DiscreteMeasure, path) -> None:
    """Header '# grid xmin xmax ymin ymax nx ny' plus the weight matrix."""
    if measure.grid is None:
        raise ValueError("grid serialization needs a grid-backed measure")
    g = measure.grid
    path = Path(path)
    header = (
        f"# grid {_g(g.xmin)} {_g(g.xmax)} {_g(g.ymin)} {_g(g.ymax)} {g.nx} {g.ny}"
    )
    body = "\n".join(
        " ".join(_g(v) for v in row) for row in measure.weights.reshape(g.shape)
    )
    path.write_text(header + "\n" + body + "\n")


def grid_measure_from_text(path) -> DiscreteMeasure:
    path = Path(path)
    lines = path.read_text().strip().splitlines()
    if not lines or not lines[0].startswith("# grid "):
        raise ValueError(f"{path}: missing grid header")
    toks = lines[0].split()[2:]
    xmin, xmax, ymin, ymax = map(float, toks[:4])
    nx, ny = int(toks[4]), int(toks[5])
    grid = GridSpec(xmin, xmax, ymin, ymax, nx, ny)
    w = np.array([[float(v) for v in line.split()] for line in lines[1:]])
    if w.shape != grid.shape:
        raise ValueError(f"{path}: weight matrix shape {w.shape} != {grid.shape}")
    return DiscreteMeasure(grid.centers(), w.ravel(), grid)


def plan_to_csv(plan, path) -> None:
    """Triples i,j,mass; accepts a dense array or a sparse TransportPlan."""
    path = Path(path)
    lines = ["i,j,mass"]
    if hasattr(plan, "rows"):
        order = np.lexsort((plan.cols, plan.rows))
        for k in order:
            lines.append(f"{plan.rows[k]},{plan.cols[k]},{_g(plan.masses[k])}")
    else:
        dense = np.asarray(plan)
        rr, cc = np.nonzero(dense)
        for i, j in zip(rr, cc):
            lines.append(f"{i},{j},{_g(dense[i, j])}")
    path.write_text("\n".join(lines) + "\n")


def matrix_to_csv(matrix: np.ndarray, path) -> None:
    path = Path(path)
    body = "\n".join(",".join(_g(v) for v in row) for row in np.atleast_2d(matrix))
    path.write_text(body + "\n")


def write_pgm(values: np.ndarray, path, maxval: int = 255) -> float:
    """ASCII PGM (P2) heatmap, max-normalized; returns the normalizer.

    Row 0 of the array is written first, so grids render with y down.
    """
    path = Path(path)
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 2:
        raise ValueError("PGM export needs a 2D array")
    peak = float(vals.max())
    scale = peak if peak > 0 else 1.0
    quant = np.rint(np.clip(vals / scale, 0, 1) * maxval).astype(int)
    lines = ["P2", f"{vals.shape[1]} {vals.shape[0]}", str(maxval)]
    lines.extend(" ".join(str(v) for v in row) for row in quant)
    path.write_text("\n".join(lines) + "\n")
    return scale


def write_summary(path, entries: dict) -> None:
    """key = value lines; floats at full precision, None skipped."""
    path = Path(path)
    lines = []
    for key, value in entries.items():
        if value is None:
            continue
        if isinstance(value, float):
            lines.append(f"{key} = {_g(value)}")
        else:
            lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")


def read_summary(path) -> dict:
    path = Path(path)
    out = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def write_manifest(directory, filenames) -> Path:
    """manifest.txt listing each output file with its sha256."""
    directory = Path(directory)
    lines = []
    for name in sorted(filenames):
        digest = hashlib.sha256((directory / name).read_bytes()).hexdigest()
        lines.append(f"{digest}  {name}")
    out = directory / "manifest.txt"
    out.write_text("\n".join(lines) + "\n")
    return out
