"""Discrete measures on rectangular grids and explicit point lists.

Weights are stored as masses (already multiplied by the cell area on
grid-backed measures); densities are recovered by dividing by the cell
area.  All containers are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "DiscreteMeasure",
    "SupportMask",
    "DensityBound",
    "Free",
    "Support",
    "Density",
    "build_grid",
    "measure_from_density",
    "measure_from_points",
    "dirac",
    "sum_measures",
    "total_mass",
    "normalize",
    "mask_from_predicate",
    "full_mask",
    "box_mask",
    "bound_from_constant",
    "bound_from_function",
]

BBox = Sequence[Sequence[float]]


def _frozen(a: np.ndarray, dtype=float) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of nx*ny cells over an axis-aligned box.

    Cell centers sit half a cell inside the box; the row-major flat index
    of cell (ix, iy) is iy*nx + ix.
    """

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"cell counts must be >= 1, got nx={self.nx}, ny={self.ny}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("degenerate bounding box")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        """(ny, nx), the shape of row-major cell arrays."""
        return (self.ny, self.nx)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def x_centers(self) -> np.ndarray:
        return self.xmin + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.ymin + (np.arange(self.ny) + 0.5) * self.dy

    def centers(self) -> np.ndarray:
        """All cell centers as an (nx*ny, 2) array, row-major."""
        X, Y = np.meshgrid(self.x_centers(), self.y_centers())
        return np.column_stack([X.ravel(), Y.ravel()])

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_centers(), self.y_centers())

    def nearest_cell(self, point: Sequence[float]) -> int:
        """Flat index of the cell center nearest to `point`.

        Equidistant centers resolve to the smallest row-major index.
        """
        p = np.asarray(point, dtype=float)
        if p.shape != (2,):
            raise ValueError("point must be 2D for grid snapping")
        d2 = ((self.centers() - p) ** 2).sum(axis=1)
        return int(np.argmin(d2))


def build_grid(bbox: BBox, nx: int, ny: int) -> GridSpec:
    """Grid over bbox = ((xmin, xmax), (ymin, ymax)) with nx*ny cells."""
    (xmin, xmax), (ymin, ymax) = bbox
    return GridSpec(float(xmin), float(xmax), float(ymin), float(ymax), int(nx), int(ny))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nonnegative weights on a finite set of support points.

    `grid` is set when the support is exactly the row-major cell centers
    of a :class:`GridSpec`, in which case `density()` is meaningful.
    """

    points: np.ndarray
    weights: np.ndarray
    grid: GridSpec | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights length mismatch")
        if pts.shape[0] == 0:
            raise ValueError("empty support")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite support points")
        if not np.all(np.isfinite(w)):
            raise ValueError("non-finite weights")
        if np.any(w < 0):
            raise ValueError("negative weights")
        if self.grid is not None:
            if pts.shape[0] != self.grid.n_cells:
                raise ValueError("grid-backed measure must weight every cell")
        elif len(np.unique(pts, axis=0)) != pts.shape[0]:
            raise ValueError("support points must be pairwise distinct")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def normalize(self) -> "DiscreteMeasure":
        """Rescale to unit mass; bit-for-bit idempotent.

        Iterates the rescaling to a floating-point fixed point so that
        normalizing twice returns identical bits.
        """
        w = self.weights
        s = float(w.sum())
        if s <= 0:
            raise ValueError("cannot normalize a zero measure")
        for _ in range(10):
            if s == 1.0:
                break
            rescaled = w / s
            if np.array_equal(rescaled, w):
                break
            w = rescaled
            s = float(w.sum())
        return DiscreteMeasure(self.points, w, self.grid)

    def with_weights(self, weights: np.ndarray) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, weights, self.grid)

    def density(self) -> np.ndarray:
        """Cell densities (mass / cell_area) as a (ny, nx) array."""
        if self.grid is None:
            raise ValueError("density is only defined for grid-backed measures")
        return self.weights.reshape(self.grid.shape) / self.grid.cell_area

    def is_probability(self, tol: float = 1e-9) -> bool:
        return abs(self.total_mass() - 1.0) <= tol


def measure_from_density(
    grid: GridSpec,
    density_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    normalize_flag: bool = False,
) -> DiscreteMeasure:
    """Discretize a density: weight = density(center) * cell_area.

    `density_fn` must accept the (ny, nx) meshgrid arrays of cell-center
    coordinates and return nonnegative values of the same shape.
    """
    X, Y = grid.meshgrid()
    vals = np.broadcast_to(np.asarray(density_fn(X, Y), dtype=float), X.shape)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ValueError("density must be finite and nonnegative on cell centers")
    w = vals.ravel() * grid.cell_area
    m = DiscreteMeasure(grid.centers(), w, grid)
    return m.normalize() if normalize_flag else m


def measure_from_points(points, weights) -> DiscreteMeasure:
    return DiscreteMeasure(np.asarray(points, dtype=float), np.asarray(weights, dtype=float))


def dirac(support: GridSpec | np.ndarray, point, mass: float = 1.0) -> DiscreteMeasure:
    """Atom of the given mass on the support point nearest to `point`.

    On a grid the atom snaps to the nearest cell center; on an explicit
    point list it snaps to the nearest listed point.  Equidistant
    candidates resolve to the smallest index.
    """
    if mass < 0:
        raise ValueError("mass must be nonnegative")
    if isinstance(support, GridSpec):
        target = support.centers()[support.nearest_cell(point)]
    else:
        pts = np.asarray(support, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        p = np.asarray(point, dtype=float).ravel()
        if p.shape[0] != pts.shape[1]:
            raise ValueError("point dimension mismatch with support")
        d2 = ((pts - p) ** 2).sum(axis=1)
        target = pts[int(np.argmin(d2))]
    return DiscreteMeasure(target[None, :], np.array([float(mass)]))


def sum_measures(measures: Iterable[DiscreteMeasure]) -> DiscreteMeasure:
    """Merge measures, accumulating weights on coincident points.

    The merged support is sorted lexicographically, which makes the
    result independent of the input order.
    """
    ms = list(measures)
    if not ms:
        raise ValueError("no measures to sum")
    pts = np.vstack([m.points for m in ms])
    w = np.concatenate([m.weights for m in ms])
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    acc = np.zeros(len(uniq))
    np.add.at(acc, inverse, w)
    return DiscreteMeasure(uniq, acc)


def total_mass(m: DiscreteMeasure) -> float:
    return m.total_mass()


def normalize(m: DiscreteMeasure) -> DiscreteMeasure:
    return m.normalize()


@dataclass(frozen=True)
class SupportMask:
    """Boolean cell indicator; the admissible region K on a grid."""

    grid: GridSpec
    indicator: np.ndarray

    def __post_init__(self):
        ind = np.asarray(self.indicator, dtype=bool)
        if ind.shape != self.grid.shape:
            raise ValueError(f"indicator shape {ind.shape} != grid shape {self.grid.shape}")
        if not ind.any():
            raise ValueError("empty support mask")
        object.__setattr__(self, "indicator", _frozen(ind, dtype=bool))

    @cached_property
    def boundary_band(self) -> np.ndarray:
        """Mask cells with a 4-neighbor outside the mask (grid edge counts)."""
        ind = self.indicator
        padded = np.zeros((ind.shape[0] + 2, ind.shape[1] + 2), dtype=bool)
        padded[1:-1, 1:-1] = ind
        interior = (
            padded[:-2, 1:-1]
            & padded[2:, 1:-1]
            & padded[1:-1, :-2]
            & padded[1:-1, 2:]
        )
        band = ind & ~interior
        band.flags.writeable = False
        return band

    @property
    def n_active(self) -> int:
        return int(self.indicator.sum())

    def flat_indices(self) -> np.ndarray:
        return np.flatnonzero(self.indicator.ravel())


def mask_from_predicate(grid: GridSpec, predicate) -> SupportMask:
    """Mask of cells whose center satisfies a vectorized predicate(x, y)."""
    X, Y = grid.meshgrid()
    return SupportMask(grid, np.asarray(predicate(X, Y), dtype=bool))


def full_mask(grid: GridSpec) -> SupportMask:
    return SupportMask(grid, np.ones(grid.shape, dtype=bool))


def box_mask(grid: GridSpec, bbox: BBox) -> SupportMask:
    (xmin, xmax), (ymin, ymax) = bbox
    return mask_from_predicate(
        grid, lambda X, Y: (X >= xmin) & (X <= xmax) & (Y >= ymin) & (Y <= ymax)
    )


@dataclass(frozen=True)
class DensityBound:
    """Per-cell density cap; the cell-mass cap is cap * cell_area.

    The total cap mass must exceed 1 so that a probability pivot fits
    under the bound.
    """

    grid: GridSpec
    cap: np.ndarray

    def __post_init__(self):
        cap = np.asarray(self.cap, dtype=float)
        if cap.shape != self.grid.shape:
            raise ValueError(f"cap shape {cap.shape} != grid shape {self.grid.shape}")
        if np.any(cap < 0) or not np.all(np.isfinite(cap)):
            raise ValueError("cap must be finite and nonnegative")
        if cap.sum() * self.grid.cell_area <= 1.0:
            raise ValueError("infeasible density bound: total cap mass must exceed 1")
        object.__setattr__(self, "cap", _frozen(cap))

    @property
    def cell_mass_cap(self) -> np.ndarray:
        return self.cap * self.grid.cell_area

    @property
    def total_cap_mass(self) -> float:
        return float(self.cap.sum() * self.grid.cell_area)


def bound_from_constant(grid: GridSpec, level: float) -> DensityBound:
    return DensityBound(grid, np.full(grid.shape, float(level)))


def bound_from_function(grid: GridSpec, fn) -> DensityBound:
    X, Y = grid.meshgrid()
    return DensityBound(grid, np.broadcast_to(np.asarray(fn(X, Y), dtype=float), X.shape))


@dataclass(frozen=True)
class Free:
    """No constraint on the pivot beyond living on the pivot grid."""


@dataclass(frozen=True)
class Support:
    """Pivot supported inside the masked region."""

    mask: SupportMask


@dataclass(frozen=True)
class Density:
    """Pivot density capped cellwise."""

    bound: DensityBound
