"""Power costs, dense cost matrices, and the reduced three-point costs.

Two reductions collapse a problem with an intermediate stop to plain
two-marginal transport: the interpolation reduction takes the best pivot
in K for every source/target pair, the parking reduction additionally
lets the pair skip the pivot and walk directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CostSpec",
    "ReducedCostResult",
    "ParkingCostResult",
    "eval_cost",
    "cost_matrix",
    "reduced_interpolation_cost",
    "parking_effective_cost",
    "coercivity_box",
]

_CHUNK = 128  # pivot points per block in the reduced-cost scans


@dataclass(frozen=True)
class CostSpec:
    """Cost scale * |x - y|**exponent (Euclidean norm)."""

    exponent: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.exponent > 0):
            raise ValueError("exponent must be positive")
        if not (self.scale > 0):
            raise ValueError("scale must be positive")


def eval_cost(spec: CostSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("dimension mismatch between points")
    r = float(np.linalg.norm(x - y))
    return spec.scale * r**spec.exponent


def _as_points(a) -> np.ndarray:
    p = np.asarray(a, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2 or p.shape[0] == 0:
        raise ValueError("support must be a nonempty (n, d) array")
    return p


def cost_matrix(spec: CostSpec, support_a, support_b) -> np.ndarray:
    """Dense (len(a), len(b)) matrix of eval_cost over all pairs."""
    A = _as_points(support_a)
    B = _as_points(support_b)
    if A.shape[1] != B.shape[1]:
        raise ValueError("supports have different dimensions")
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)
    out = spec.scale * d2 ** (spec.exponent / 2.0)
    if not np.all(np.isfinite(out)):
        raise ValueError("cost matrix has non-finite entries")
    return out


@dataclass(frozen=True)
class ReducedCostResult:
    """min over pivot points of c0(x0, .) + c1(., x1), with argmins.

    matrix[i, j] is the reduced cost; argmin_map[i, j] indexes the pivot
    point attaining it (smallest index on ties).
    """

    matrix: np.ndarray
    argmin_map: np.ndarray


@dataclass(frozen=True)
class ParkingCostResult:
    """Entrywise min of walking directly and the best drive-then-walk.

    Where walk_flag is set, walking attains the min (ties go to walking)
    and park_map is -1; elsewhere park_map indexes the best pivot.
    """

    matrix: np.ndarray
    walk_flag: np.ndarray
    park_map: np.ndarray


def reduced_interpolation_cost(
    c0_spec: CostSpec,
    c1_spec: CostSpec,
    support0,
    support1,
    pivot_points,
) -> ReducedCostResult:
    """Exact minimum over the finite pivot set, scanned in blocks."""
    A = _as_points(support0)
    B = _as_points(support1)
    K = _as_points(pivot_points)
    if not (A.shape[1] == B.shape[1] == K.shape[1]):
        raise ValueError("supports and pivot points have different dimensions")
    n, m = A.shape[0], B.shape[0]
    best = np.full((n, m), np.inf)
    best_k = np.zeros((n, m), dtype=np.intp)
    for start in range(0, K.shape[0], _CHUNK):
        block = K[start : start + _CHUNK]
        cand = cost_matrix(c0_spec, A, block)[:, :, None] + cost_matrix(
            c1_spec, block, B
        )[None, :, :]
        k_loc = np.argmin(cand, axis=1)
        val = np.take_along_axis(cand, k_loc[:, None, :], axis=1)[:, 0, :]
        improve = val < best
        best = np.where(improve, val, best)
        best_k = np.where(improve, k_loc + start, best_k)
    return ReducedCostResult(best, best_k)


def parking_effective_cost(
    c0_spec: CostSpec,
    c1_spec: CostSpec,
    support0,
    support1,
    pivot_points,
) -> ParkingCostResult:
    reduced = reduced_interpolation_cost(c0_spec, c1_spec, support0, support1, pivot_points)
    walk = cost_matrix(c1_spec, support0, support1)
    walk_flag = walk <= reduced.matrix
    matrix = np.where(walk_flag, walk, reduced.matrix)
    park_map = np.where(walk_flag, -1, reduced.argmin_map)
    return ParkingCostResult(matrix, walk_flag, park_map)


def coercivity_box(points0, points1, pad_factor: float = 1.0) -> tuple[tuple[float, float], tuple[float, float]]:
    """Bounding box of both supports, padded by pad_factor * diameter.

    Heuristic stand-in for a compact set containing every pivot argmin
    in the unconstrained case; the padding factor is the knob.
    """
    P = np.vstack([_as_points(points0), _as_points(points1)])
    lo = P.min(axis=0)
    hi = P.max(axis=0)
    diam = float(np.linalg.norm(hi - lo))
    if diam == 0.0:
        diam = 1.0
    pad = pad_factor * diam
    if P.shape[1] == 1:
        return ((float(lo[0] - pad), float(hi[0] + pad)), (0.0, 1.0))
    return (
        (float(lo[0] - pad), float(hi[0] + pad)),
        (float(lo[1] - pad), float(hi[1] + pad)),
    )
