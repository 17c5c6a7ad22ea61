"""Exact desk-scale solvers used as ground truth for the entropic ones.

exact_ot solves the transportation LP to a vertex (HiGHS interior point
with crossover) and then recomputes the flows on the optimal spanning
forest by leaf elimination, so returned plans satisfy the marginals to
machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .costs import (
    CostSpec,
    parking_effective_cost,
    reduced_interpolation_cost,
)
from .measures import DiscreteMeasure, GridSpec

__all__ = [
    "TransportPlan",
    "ExactParkingSolution",
    "exact_ot",
    "quantile_ot_1d",
    "interpolation_via_reduction",
    "parking_via_reduction",
    "parking_level_set",
    "alpha_closed_form_p2",
]

_BALANCE_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Sparse plan as (row, col, mass) triples plus the LP potentials."""

    rows: np.ndarray
    cols: np.ndarray
    masses: np.ndarray
    shape: tuple[int, int]
    dual_row: np.ndarray
    dual_col: np.ndarray

    def marginal0(self) -> np.ndarray:
        out = np.zeros(self.shape[0])
        np.add.at(out, self.rows, self.masses)
        return out

    def marginal1(self) -> np.ndarray:
        out = np.zeros(self.shape[1])
        np.add.at(out, self.cols, self.masses)
        return out

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        np.add.at(out, (self.rows, self.cols), self.masses)
        return out

    def dual_value(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(a @ self.dual_row + b @ self.dual_col)


def _tree_flows(n: int, m: int, rows, cols, a, b):
    """Recompute flows on a forest support from the marginals.

    Returns None when the support contains a cycle (non-vertex input).
    """
    n_edges = len(rows)
    n_nodes = n + m
    incident: list[list[int]] = [[] for _ in range(n_nodes)]
    for e in range(n_edges):
        incident[rows[e]].append(e)
        incident[cols[e] + n].append(e)
    degree = np.array([len(lst) for lst in incident])
    need = np.concatenate([a, b]).astype(float)
    alive = np.ones(n_edges, dtype=bool)
    flow = np.zeros(n_edges)
    stack = [v for v in range(n_nodes) if degree[v] == 1]
    while stack:
        v = stack.pop()
        if degree[v] != 1:
            continue
        e = next(ei for ei in incident[v] if alive[ei])
        flow[e] = need[v]
        other = cols[e] + n if v < n else rows[e]
        need[other] -= need[v]
        need[v] = 0.0
        alive[e] = False
        degree[v] -= 1
        degree[other] -= 1
        if degree[other] == 1:
            stack.append(other)
    if alive.any():
        return None  # cycle: leave the LP solution as-is
    if flow.min() < -1e-9:
        return None
    return np.maximum(flow, 0.0)


def exact_ot(cost: np.ndarray, a, b) -> tuple[TransportPlan, float]:
    """Exact optimal plan and value of the discrete transportation LP.

    Masses may differ by at most 1e-9; b is then rescaled proportionally.
    """
    C = np.asarray(cost, dtype=float)
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n, m = C.shape
    if a.shape[0] != n or b.shape[0] != m:
        raise ValueError("marginal sizes do not match the cost matrix")
    if not np.all(np.isfinite(C)):
        raise ValueError("non-finite costs")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("negative masses")
    sa, sb = a.sum(), b.sum()
    if abs(sa - sb) > _BALANCE_TOL * max(1.0, sa, sb):
        raise ValueError(f"unbalanced masses: {sa} vs {sb}")
    if sa <= 0:
        raise ValueError("zero total mass")
    b = b * (sa / sb)

    ia = np.flatnonzero(a > 0)
    ib = np.flatnonzero(b > 0)
    Cr = C[np.ix_(ia, ib)]
    ar = a[ia]
    br = b[ib]
    nr, mr = len(ia), len(ib)

    if nr == 1 or mr == 1:
        # plan is forced by the marginals
        if nr == 1:
            plan_r = np.outer(np.ones(1), br)
        else:
            plan_r = np.outer(ar, np.ones(1))
        u = np.zeros(nr)
        v = np.zeros(mr)
        if nr == 1:
            v[:] = Cr[0, :]
        else:
            u[:] = Cr[:, 0]
        rr, cc = np.nonzero(plan_r)
        masses = plan_r[rr, cc]
    else:
        A_rows = sparse.kron(sparse.eye(nr, format="csr"), np.ones((1, mr)), format="csr")
        A_cols = sparse.kron(np.ones((1, nr)), sparse.eye(mr, format="csr"), format="csr")
        A = sparse.vstack([A_rows, A_cols], format="csr")
        rhs = np.concatenate([ar, br])
        res = linprog(
            Cr.ravel(),
            A_eq=A,
            b_eq=rhs,
            bounds=(0, None),
            method="highs-ipm",
        )
        if res.status != 0:
            raise RuntimeError(f"transport LP failed: {res.message}")
        x = res.x.reshape(nr, mr)
        thresh = 1e-14 * sa
        rr, cc = np.nonzero(x > thresh)
        repaired = _tree_flows(nr, mr, rr, cc, ar, br)
        if repaired is not None:
            masses = repaired
            keep = masses > 0
            rr, cc, masses = rr[keep], cc[keep], masses[keep]
        else:
            masses = x[rr, cc]
        u = res.eqlin.marginals[:nr]
        v = res.eqlin.marginals[nr:]

    dual_row = np.zeros(n)
    dual_col = np.zeros(m)
    dual_row[ia] = u
    dual_col[ib] = v
    plan = TransportPlan(ia[rr], ib[cc], np.asarray(masses, dtype=float), (n, m), dual_row, dual_col)
    value = float(plan.masses @ C[plan.rows, plan.cols])
    return plan, value


def _line_coordinates(points: np.ndarray) -> np.ndarray:
    """Project points onto their common line; error if not collinear."""
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        return p.copy()
    if p.shape[1] == 1:
        return p[:, 0].copy()
    base = p[0]
    diffs = p - base
    norms = np.linalg.norm(diffs, axis=1)
    scale = norms.max()
    if scale == 0:
        return np.zeros(p.shape[0])
    direction = diffs[int(np.argmax(norms))] / scale
    direction /= np.linalg.norm(direction)
    coords = diffs @ direction
    residual = diffs - coords[:, None] * direction
    if np.abs(residual).max() > 1e-9 * max(scale, 1.0):
        raise ValueError("measure support is not one-dimensional")
    return coords


def quantile_ot_1d(mu0: DiscreteMeasure, mu1: DiscreteMeasure, p: float) -> float:
    """1D transport cost |x-y|^p via the quantile (monotone) coupling.

    Exact for discrete measures when p >= 1.  For p < 1 the monotone
    coupling is not optimal in general, so the value is computed by
    exact_ot instead.
    """
    if mu0.dim != mu1.dim:
        raise ValueError("measures live in different dimensions")
    coords = _line_coordinates(np.vstack([mu0.points, mu1.points]))
    x0 = coords[: mu0.n]
    x1 = coords[mu0.n :]
    w0 = mu0.weights
    w1 = mu1.weights
    s0, s1 = w0.sum(), w1.sum()
    if abs(s0 - s1) > _BALANCE_TOL * max(1.0, s0, s1):
        raise ValueError(f"unbalanced masses: {s0} vs {s1}")
    if p < 1:
        C = np.abs(x0[:, None] - x1[None, :]) ** p
        _, value = exact_ot(C, w0, w1)
        return value

    k0 = np.flatnonzero(w0 > 0)
    k1 = np.flatnonzero(w1 > 0)
    o0 = k0[np.argsort(x0[k0], kind="stable")]
    o1 = k1[np.argsort(x1[k1], kind="stable")]
    g0 = x0[o0]
    g1 = x1[o1]
    c0 = np.cumsum(w0[o0])
    c1 = np.cumsum(w1[o1])
    # pin both cumulative masses to a common total so no quantile level
    # is lost to summation-order drift
    c1 *= c0[-1] / c1[-1]
    c1[-1] = c0[-1]
    bounds = np.union1d(np.union1d(c0, c1), [0.0])
    bounds = bounds[bounds <= c0[-1]]
    ds = np.diff(bounds)
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    i0 = np.minimum(np.searchsorted(c0, mids, side="right"), len(g0) - 1)
    i1 = np.minimum(np.searchsorted(c1, mids, side="right"), len(g1) - 1)
    return float(np.abs(g1[i1] - g0[i0]) ** p @ ds)


def interpolation_via_reduction(
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    c0_spec: CostSpec,
    c1_spec: CostSpec,
    pivot_points,
) -> tuple[float, DiscreteMeasure]:
    """Exact constrained interpolation through a finite pivot set.

    Solves the two-marginal problem with the reduced cost and pushes the
    optimal plan through the argmin map; the returned pivot measure
    accumulates mass on the pivot points.
    """
    K = np.asarray(pivot_points, dtype=float)
    if K.ndim == 1:
        K = K[:, None]
    reduced = reduced_interpolation_cost(c0_spec, c1_spec, mu0.points, mu1.points, K)
    plan, value = exact_ot(reduced.matrix, mu0.weights, mu1.weights)
    w = np.zeros(K.shape[0])
    np.add.at(w, reduced.argmin_map[plan.rows, plan.cols], plan.masses)
    return value, DiscreteMeasure(K, w)


@dataclass(frozen=True)
class ExactParkingSolution:
    """Decomposition of an optimal effective-cost plan into walk and drive.

    drive_* arrays are aligned triples (source, pivot, target, mass); the
    parking measure is the pivot marginal of the driving part.
    """

    walk_plan: TransportPlan
    drive_rows: np.ndarray
    drive_pivots: np.ndarray
    drive_cols: np.ndarray
    drive_masses: np.ndarray
    parking_measure: DiscreteMeasure
    driving_fraction: float
    total_cost: float

    def drive_marginal0(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        np.add.at(out, self.drive_rows, self.drive_masses)
        return out

    def drive_marginal1(self, m: int) -> np.ndarray:
        out = np.zeros(m)
        np.add.at(out, self.drive_cols, self.drive_masses)
        return out


def parking_via_reduction(
    nu0: DiscreteMeasure,
    nu1: DiscreteMeasure,
    c0_spec: CostSpec,
    c1_spec: CostSpec,
    pivot_points,
) -> ExactParkingSolution:
    """Exact parking solution via the effective-cost transport problem."""
    K = np.asarray(pivot_points, dtype=float)
    if K.ndim == 1:
        K = K[:, None]
    eff = parking_effective_cost(c0_spec, c1_spec, nu0.points, nu1.points, K)
    beta, value = exact_ot(eff.matrix, nu0.weights, nu1.weights)
    on_walk = eff.walk_flag[beta.rows, beta.cols]
    walk_plan = TransportPlan(
        beta.rows[on_walk],
        beta.cols[on_walk],
        beta.masses[on_walk],
        beta.shape,
        beta.dual_row,
        beta.dual_col,
    )
    dr = beta.rows[~on_walk]
    dc = beta.cols[~on_walk]
    dm = beta.masses[~on_walk]
    dp = eff.park_map[dr, dc]
    w = np.zeros(K.shape[0])
    np.add.at(w, dp, dm)
    alpha = float(dm.sum())
    return ExactParkingSolution(
        walk_plan=walk_plan,
        drive_rows=dr,
        drive_pivots=dp,
        drive_cols=dc,
        drive_masses=dm,
        parking_measure=DiscreteMeasure(K, w),
        driving_fraction=alpha,
        total_cost=value,
    )


def parking_level_set(
    p: float,
    lam: float,
    x0,
    cap: float,
    quadrature_grid: GridSpec,
) -> tuple[float, np.ndarray, float]:
    """Analytic two-Dirac parking region by level-set quadrature.

    f(x) = |x - x0|^p + lam*|x|^p - lam*|x0|^p.  If the sublevel {f <= 0}
    holds less than unit mass at the given density cap, the region is
    {f <= 0} and the driving fraction is its capped mass; otherwise the
    level c* < 0 with cap*|{f <= c*}| = 1 is found by bisection.
    Returns (alpha, region mask (ny, nx), c*).
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape != (2,) or np.all(x0 == 0):
        raise ValueError("x0 must be a nonzero planar point")
    X, Y = quadrature_grid.meshgrid()
    d0 = np.hypot(X - x0[0], Y - x0[1])
    dc = np.hypot(X, Y)
    f = d0**p + lam * dc**p - lam * float(np.linalg.norm(x0)) ** p
    cell = quadrature_grid.cell_area

    def area(level: float) -> float:
        return float((f <= level).sum()) * cell

    if cap * area(0.0) < 1.0:
        region = f <= 0.0
        alpha = cap * area(0.0)
        c_star = 0.0
    else:
        lo, hi = float(f.min()), 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if cap * area(mid) >= 1.0:
                hi = mid
            else:
                lo = mid
        c_star = hi
        region = f <= c_star
        alpha = 1.0
    if region.any():
        edge = region[0, :].any() or region[-1, :].any() or region[:, 0].any() or region[:, -1].any()
        if edge:
            raise ValueError("quadrature grid does not cover the parking region")
    return alpha, region, c_star


def alpha_closed_form_p2(lam: float, x0_norm: float) -> float:
    """Driving fraction pi*|x0|^2*lam^2/(lam+1)^2 in the sub-threshold regime."""
    if not (x0_norm < (lam + 1) / (lam * math.sqrt(math.pi))):
        raise ValueError("x0 is beyond the full-driving threshold; alpha saturates at 1")
    return math.pi * x0_norm**2 * lam**2 / (lam + 1) ** 2
