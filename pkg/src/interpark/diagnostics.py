"""Quantitative checks of the structural predictions on computed solutions.

Pure functions of their inputs; thresholds (what counts as a pass) live
with the tests, not here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostSpec
from .measures import DiscreteMeasure, SupportMask

__all__ = [
    "DiagnosticsReport",
    "bang_bang_fraction",
    "boundary_mass_fraction",
    "duality_gap",
    "interior_density_bound_check",
]

_GAP_FLOOR = -1e-9


@dataclass(frozen=True)
class DiagnosticsReport:
    """One row of the acceptance matrix; None marks an inapplicable check."""

    bang_bang: float | None = None
    boundary_mass: float | None = None
    duality_gap: float | None = None
    marginal_violation: float | None = None
    interior_density_ratio: float | None = None

    def as_dict(self) -> dict:
        return {
            "bang_bang": self.bang_bang,
            "boundary_mass": self.boundary_mass,
            "duality_gap": self.duality_gap,
            "marginal_violation": self.marginal_violation,
            "interior_density_ratio": self.interior_density_ratio,
        }


def bang_bang_fraction(
    pivot: DiscreteMeasure,
    cap: np.ndarray,
    band: tuple[float, float] = (0.05, 0.95),
) -> float:
    """Fraction of pivot mass in cells strictly inside the cap band.

    A bang-bang measure saturates the cap or vanishes, so mass at
    intermediate density levels measures distance from that structure.
    cap is the per-cell density bound, shaped like the pivot grid.
    """
    if pivot.grid is None:
        raise ValueError("bang-bang fraction needs a grid-backed pivot")
    lo, hi = band
    if not (0 <= lo < hi <= 1):
        raise ValueError("band must satisfy 0 <= lo < hi <= 1")
    w = pivot.weights
    total = w.sum()
    if total <= 0:
        return 0.0
    cap = np.asarray(cap, dtype=float).ravel()
    if cap.shape != w.shape:
        raise ValueError("cap shape does not match the pivot grid")
    if np.any((w > 0) & (cap <= 0)):
        raise ValueError("pivot mass on cells with zero cap")
    density = pivot.density().ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(cap > 0, density / cap, 0.0)
    inside = (ratio > lo) & (ratio < hi)
    return float(w[inside].sum() / total)


def boundary_mass_fraction(pivot: DiscreteMeasure, mask: SupportMask) -> float:
    """Pivot mass on the one-cell boundary ring of the mask, relative to total."""
    if pivot.grid is None or pivot.grid != mask.grid:
        raise ValueError("pivot and mask must share a grid")
    w = pivot.weights
    total = w.sum()
    if total <= 0:
        raise ValueError("zero pivot measure")
    band = mask.boundary_band.ravel()
    return float(w[band].sum() / total)


def duality_gap(primal_value: float, dual_value: float) -> float:
    """primal - dual; a gap below -1e-9 signals an internal error."""
    if not (np.isfinite(primal_value) and np.isfinite(dual_value)):
        raise ValueError("non-finite primal or dual value")
    gap = float(primal_value - dual_value)
    if gap < _GAP_FLOOR:
        raise ValueError(f"negative duality gap {gap:.3e} beyond tolerance")
    return gap


def interior_density_bound_check(
    pivot: DiscreteMeasure,
    mu0: DiscreteMeasure,
    c0_spec: CostSpec,
    c1_spec: CostSpec,
    mask: SupportMask,
) -> float:
    """Max interior pivot density over the quadratic-cost L-infinity bound.

    The bound is ||mu0||_inf * 2^d * (Lambda/lambda)^d with lambda and
    Lambda the extreme Hessian eigenvalues of the two quadratic costs;
    interior means at least two cells from the mask boundary.  Values at
    or below 1 (plus discretization slack) are consistent with the bound.
    """
    if c0_spec.exponent != 2 or c1_spec.exponent != 2:
        raise ValueError("interior density bound applies to quadratic costs only")
    if pivot.grid is None or pivot.grid != mask.grid:
        raise ValueError("pivot and mask must share a grid")
    if mu0.grid is None:
        raise ValueError("mu0 must be a grid density (absolutely continuous)")
    d = 1 if pivot.grid.ny == 1 else 2
    lam = 2.0 * min(c0_spec.scale, c1_spec.scale)
    Lam = 2.0 * max(c0_spec.scale, c1_spec.scale)
    bound = float(mu0.density().max()) * 2.0**d * (Lam / lam) ** d
    ind = mask.indicator
    interior = ind.copy()
    for _ in range(2):
        if d == 1:
            padded = np.zeros((1, interior.shape[1] + 2), dtype=bool)
            padded[:, 1:-1] = interior
            interior = padded[:, :-2] & padded[:, 2:]
        else:
            padded = np.zeros((interior.shape[0] + 2, interior.shape[1] + 2), dtype=bool)
            padded[1:-1, 1:-1] = interior
            interior = (
                padded[:-2, 1:-1]
                & padded[2:, 1:-1]
                & padded[1:-1, :-2]
                & padded[1:-1, 2:]
            )
    density = pivot.density()
    if not interior.any():
        return 0.0
    return float(density[interior].max() / bound)
