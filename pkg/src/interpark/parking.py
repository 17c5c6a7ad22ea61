"""Entropic solver for the parking problem: walk, or drive to a pivot.

Three plans are coupled: a walking plan between the resident and service
distributions, and two driving legs through the parking grid.  The
three-index driving coupling is never materialized; its two pairwise
legs share the pivot potentials, which carries the gluing constraint.
The driving fraction alpha is the mass of the parking measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostSpec, cost_matrix
from .entropic import (
    DualPotentials,
    EntropicReport,
    SolverConfig,
    log_masses,
    lse,
    one_mode_extrapolation,
)
from .exact_oracles import ExactParkingSolution
from .measures import (
    Density,
    DiscreteMeasure,
    Free,
    GridSpec,
    Support,
)

__all__ = [
    "ParkingProblem",
    "ParkingEntropicSolution",
    "solve_parking",
    "parking_objective",
    "split_driving_walking",
    "dual_objective_parking",
]


@dataclass(frozen=True)
class ParkingProblem:
    """Residents nu0, services nu1, driving cost0 and walking cost1 = lam*cost0.

    Walking must cost at least driving (lam >= 1).  Setting
    walking_enabled=False removes the direct-walk option, which forces
    full driving and reduces the problem to plain interpolation.
    """

    nu0: DiscreteMeasure
    nu1: DiscreteMeasure
    cost0: CostSpec
    cost1: CostSpec
    pivot_grid: GridSpec
    constraint: Free | Support | Density = Free()
    config: SolverConfig = SolverConfig()
    walking_enabled: bool = True

    def __post_init__(self):
        for name, m in (("nu0", self.nu0), ("nu1", self.nu1)):
            if not m.is_probability(tol=1e-9):
                raise ValueError(f"{name} must be a probability measure")
        if self.cost1.exponent != self.cost0.exponent:
            raise ValueError("walking and driving costs must share the exponent")
        if self.cost1.scale < self.cost0.scale * (1 - 1e-12):
            raise ValueError("walking must cost at least driving (lam >= 1)")
        if isinstance(self.constraint, Support):
            if self.constraint.mask.grid != self.pivot_grid:
                raise ValueError("support mask lives on a different grid")
        if isinstance(self.constraint, Density):
            if self.constraint.bound.grid != self.pivot_grid:
                raise ValueError("density bound lives on a different grid")

    @property
    def lam(self) -> float:
        return self.cost1.scale / self.cost0.scale


@dataclass(frozen=True)
class ParkingEntropicSolution:
    """Walking plan, two driving legs, and the parking measure.

    walk_plan is (n0, n1); drive0 is (n0, n_active) and drive1
    (n_active, n1) over the admissible pivot cells.  mu0_driving and
    mu1_driving are the driving parts of the two marginals; alpha is the
    parking mass (the driving fraction).
    """

    walk_plan: np.ndarray
    drive0: np.ndarray
    drive1: np.ndarray
    parking_measure: DiscreteMeasure
    mu0_driving: DiscreteMeasure
    mu1_driving: DiscreteMeasure
    alpha: float
    active_cells: np.ndarray
    duals: DualPotentials
    primal_value: float
    dual_value: float
    report: EntropicReport


class _ParkingData:
    def __init__(self, problem: ParkingProblem):
        grid = problem.pivot_grid
        constraint = problem.constraint
        if isinstance(constraint, Support):
            active = constraint.mask.flat_indices()
            logcap = None
        elif isinstance(constraint, Density):
            capmass = constraint.bound.cell_mass_cap.ravel()
            active = np.flatnonzero(capmass > 0)
            logcap = np.log(capmass[active])
        else:
            active = np.arange(grid.n_cells)
            logcap = None
        self.grid = grid
        self.active = active
        self.logcap = logcap
        self.cells = grid.centers()[active]
        self.log_area = float(np.log(grid.cell_area))
        self.logw0 = log_masses(problem.nu0.weights)
        self.logw1 = log_masses(problem.nu1.weights)
        self.w0 = problem.nu0.weights
        self.w1 = problem.nu1.weights
        self.Cw = cost_matrix(problem.cost1, problem.nu0.points, problem.nu1.points)
        self.C0 = cost_matrix(problem.cost0, problem.nu0.points, self.cells)
        self.C1 = cost_matrix(problem.cost1, self.cells, problem.nu1.points)
        self.density = isinstance(constraint, Density)
        self.walking = problem.walking_enabled

    def kernels(self, eps: float):
        logr_w = -self.Cw / eps
        if not self.walking:
            logr_w = np.full_like(logr_w, -np.inf)
        return (
            logr_w,
            -self.C0 / eps + self.log_area,
            -self.C1 / eps + self.log_area,
        )


def _pre_marginals(data, logr0, logr1, phi0, phi1):
    a0 = lse((data.logw0 + phi0)[:, None] + logr0, axis=0)
    a1 = lse(logr1 + (data.logw1 + phi1)[None, :], axis=1)
    return a0, a1


def _psi_pair(a0, a1, logcap):
    """Joint (psi0, psi1) update: cap the geometric-mean parking estimate.

    Exact coordinate ascent in the psi block; keeps psi0 + psi1 at zero
    off the saturated set and nonpositive on it.
    """
    target = 0.5 * (a0 + a1)
    if logcap is not None:
        target = np.minimum(target, logcap)
    return target - a0, target - a1


def _sweep(data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1):
    """phi updates see walking + driving inside one log-sum-exp; psi caps the pivot."""
    walk0 = lse(logr_w + (data.logw1 + phi1)[None, :], axis=1)
    drive0 = lse(logr0 + psi0[None, :], axis=1)
    phi0 = -np.logaddexp(walk0, drive0)
    if data.density:
        a0, a1 = _pre_marginals(data, logr0, logr1, phi0, phi1)
        psi0, psi1 = _psi_pair(a0, a1, data.logcap)
        walk1 = lse(logr_w + (data.logw0 + phi0)[:, None], axis=0)
        drive1 = lse(logr1 + psi1[:, None], axis=0)
        phi1 = -np.logaddexp(walk1, drive1)
        a1 = lse(logr1 + (data.logw1 + phi1)[None, :], axis=1)
        psi0, psi1 = _psi_pair(a0, a1, data.logcap)
    else:
        walk1 = lse(logr_w + (data.logw0 + phi0)[:, None], axis=0)
        drive1 = lse(logr1 + psi1[:, None], axis=0)
        phi1 = -np.logaddexp(walk1, drive1)
        a0, a1 = _pre_marginals(data, logr0, logr1, phi0, phi1)
        psi0, psi1 = _psi_pair(a0, a1, None)
    return phi0, phi1, psi0, psi1


def _plans(data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1):
    log_walk = (data.logw0 + phi0)[:, None] + (data.logw1 + phi1)[None, :] + logr_w
    log_d0 = (data.logw0 + phi0)[:, None] + psi0[None, :] + logr0
    log_d1 = psi1[:, None] + (data.logw1 + phi1)[None, :] + logr1
    with np.errstate(over="ignore"):
        return np.exp(log_walk), np.exp(log_d0), np.exp(log_d1)


def _safe_ratio(target, current):
    out = np.ones_like(target)
    pos = current > 0
    out[pos] = target[pos] / current[pos]
    return out


def _round_plans(data, walk, d0, d1):
    """Project (walk, drive0, drive1) onto the exact marginal constraints.

    Joint row/column scalings keep the split between walking and driving,
    the driving pivot marginals are equalized at their minimum, and the
    missing mass is restored on the walking plan (or along the pivot
    profile when walking is disabled).
    """
    f0 = np.minimum(1.0, _safe_ratio(data.w0, walk.sum(axis=1) + d0.sum(axis=1)))
    walk = walk * f0[:, None]
    d0 = d0 * f0[:, None]
    f1 = np.minimum(1.0, _safe_ratio(data.w1, walk.sum(axis=0) + d1.sum(axis=0)))
    walk = walk * f1[None, :]
    d1 = d1 * f1[None, :]
    m0 = d0.sum(axis=0)
    m1 = d1.sum(axis=1)
    mu = np.minimum(m0, m1)
    if data.logcap is not None:
        mu = np.minimum(mu, np.exp(data.logcap))
    d0 = d0 * _safe_ratio(mu, m0)[None, :]
    d1 = d1 * _safe_ratio(mu, m1)[:, None]
    r0 = np.clip(data.w0 - walk.sum(axis=1) - d0.sum(axis=1), 0.0, None)
    r1 = np.clip(data.w1 - walk.sum(axis=0) - d1.sum(axis=0), 0.0, None)
    s = r0.sum()
    if s > 0:
        if data.walking:
            walk = walk + np.outer(r0, r1) / max(r1.sum(), 1e-300)
        else:
            if data.logcap is not None:
                slack = np.exp(data.logcap) - mu
                q = slack / slack.sum()
            else:
                total = mu.sum()
                q = mu / total if total > 0 else np.full(mu.shape, 1.0 / len(mu))
            d0 = d0 + np.outer(r0, q)
            d1 = d1 + np.outer(q, r1)
    return walk, d0, d1


def _violation(data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1):
    walk, d0, d1 = _plans(data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1)
    v = float(np.abs(walk.sum(axis=1) + d0.sum(axis=1) - data.w0).sum())
    v += float(np.abs(walk.sum(axis=0) + d1.sum(axis=0) - data.w1).sum())
    m0 = d0.sum(axis=0)
    m1 = d1.sum(axis=1)
    v += float(np.abs(m0 - m1).sum())
    if data.logcap is not None:
        capmass = np.exp(data.logcap)
        v += float(np.clip(m0 - capmass, 0, None).sum())
        v += float(np.clip(m1 - capmass, 0, None).sum())
    return v


def solve_parking(problem: ParkingProblem) -> ParkingEntropicSolution:
    data = _ParkingData(problem)
    config = problem.config
    schedule = config.resolved_schedule()

    phi0 = np.zeros(problem.nu0.n)
    phi1 = np.zeros(problem.nu1.n)
    M = len(data.active)
    psi0 = np.zeros(M)
    psi1 = np.zeros(M)

    iterations = 0
    primal_trace = []
    violation = np.inf
    prev_eps = None
    for stage, eps in enumerate(schedule):
        if prev_eps is not None:
            scale = prev_eps / eps
            phi0 = phi0 * scale
            phi1 = phi1 * scale
            psi0 = psi0 * scale
            psi1 = psi1 * scale
        prev_eps = eps
        logr_w, logr0, logr1 = data.kernels(eps)
        last = stage == len(schedule) - 1
        tol = config.marginal_tol if last else max(config.marginal_tol, config.stage_tol)
        n0 = len(phi0)
        n1 = len(phi1)
        snaps: list[np.ndarray] = []
        for it in range(config.max_iter):
            phi0, phi1, psi0, psi1 = _sweep(
                data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1
            )
            iterations += 1
            if (it + 1) % config.check_every == 0 or it == config.max_iter - 1:
                violation = _violation(
                    data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1
                )
                if violation <= tol:
                    break
            if config.accel_lag and (it + 1) % config.accel_lag == 0:
                snaps.append(np.concatenate([phi0, phi1, psi0, psi1]))
                if len(snaps) == 3:
                    cand = one_mode_extrapolation(*snaps)
                    snaps = []
                    if cand is not None:
                        before = _violation(
                            data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1
                        )
                        parts = np.split(cand, [n0, n0 + n1, n0 + n1 + M])
                        trial = _sweep(data, logr_w, logr0, logr1, *parts)
                        iterations += 1
                        after = _violation(data, logr_w, logr0, logr1, *trial)
                        if after < before:
                            phi0, phi1, psi0, psi1 = trial
        walk, d0, d1 = _plans(data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1)
        primal_trace.append(
            float((walk * data.Cw).sum() + (d0 * data.C0).sum() + (d1 * data.C1).sum())
        )

    violation = _violation(data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1)
    duals = DualPotentials(phi0=phi0, phi1=phi1, psi0=psi0, psi1=psi1)
    walk, d0, d1 = _plans(data, logr_w, logr0, logr1, phi0, phi1, psi0, psi1)
    walk, d0, d1 = _round_plans(data, walk, d0, d1)
    primal = float((walk * data.Cw).sum() + (d0 * data.C0).sum() + (d1 * data.C1).sum())
    dual = _dual_objective(data, duals, logr_w, logr0, logr1)

    w = np.zeros(data.grid.n_cells)
    w[data.active] = d0.sum(axis=0)
    parking_measure = DiscreteMeasure(data.grid.centers(), w, data.grid)
    alpha = parking_measure.total_mass()

    entropic = _entropy_objective(data, logr_w, logr0, logr1, walk, d0, d1)
    report = EntropicReport(
        primal_cost=primal,
        entropic_objective=entropic,
        marginal_violation_l1=violation,
        iterations_used=iterations,
        converged=bool(violation <= config.marginal_tol),
        epsilon=config.epsilon,
        primal_trace=tuple(primal_trace),
        duals=duals,
    )
    return ParkingEntropicSolution(
        walk_plan=walk,
        drive0=d0,
        drive1=d1,
        parking_measure=parking_measure,
        mu0_driving=DiscreteMeasure(problem.nu0.points, d0.sum(axis=1)),
        mu1_driving=DiscreteMeasure(problem.nu1.points, d1.sum(axis=0)),
        alpha=alpha,
        active_cells=data.active,
        duals=duals,
        primal_value=primal,
        dual_value=dual,
        report=report,
    )


def _entropy_objective(data, logr_w, logr0, logr1, walk, d0, d1) -> float:
    """H(walk|R) + H(d0|R0) + H(d1|R1) on (possibly rounded) plans."""
    logR_w = data.logw0[:, None] + data.logw1[None, :] + logr_w
    logR0 = data.logw0[:, None] + logr0
    logR1 = data.logw1[None, :] + logr1
    total = 0.0
    for g, logR in ((walk, logR_w), (d0, logR0), (d1, logR1)):
        pos = g > 0
        total += float((g[pos] * (np.log(g[pos]) - logR[pos])).sum() - g.sum())
    return total


def _dual_objective(data, duals, logr_w, logr0, logr1) -> float:
    walk, d0, d1 = _plans(
        data, logr_w, logr0, logr1, duals.phi0, duals.phi1, duals.psi0, duals.psi1
    )
    value = -float(walk.sum()) - float(d0.sum()) - float(d1.sum())
    value += float(data.w0 @ duals.phi0) + float(data.w1 @ duals.phi1)
    if data.logcap is not None:
        value += float(((duals.psi0 + duals.psi1) * np.exp(data.logcap)).sum())
    return value


def dual_objective_parking(
    duals: DualPotentials, problem: ParkingProblem, epsilon: float | None = None
) -> float:
    data = _ParkingData(problem)
    eps = epsilon if epsilon is not None else problem.config.epsilon
    logr_w, logr0, logr1 = data.kernels(eps)
    return _dual_objective(data, duals, logr_w, logr0, logr1)


def parking_objective(
    solution: ParkingEntropicSolution | ExactParkingSolution,
    problem: ParkingProblem,
) -> float:
    """Plan-based total cost <c1,walk> + <c0,drive0> + <c1,drive1>.

    An upper bound on the parking functional for any marginal-consistent
    plans; equals it at optimality.  Works on both entropic and exact
    solutions.
    """
    if isinstance(solution, ExactParkingSolution):
        pts0 = problem.nu0.points
        pts1 = problem.nu1.points
        piv = solution.parking_measure.points
        wp = solution.walk_plan
        walk_cost = (
            problem.cost1.scale
            * np.linalg.norm(pts0[wp.rows] - pts1[wp.cols], axis=1) ** problem.cost1.exponent
        )
        drive_cost = (
            problem.cost0.scale
            * np.linalg.norm(pts0[solution.drive_rows] - piv[solution.drive_pivots], axis=1)
            ** problem.cost0.exponent
            + problem.cost1.scale
            * np.linalg.norm(piv[solution.drive_pivots] - pts1[solution.drive_cols], axis=1)
            ** problem.cost1.exponent
        )
        return float(wp.masses @ walk_cost + solution.drive_masses @ drive_cost)
    data = _ParkingData(problem)
    if solution.walk_plan.shape != data.Cw.shape or solution.drive0.shape[1] != len(data.active):
        raise ValueError("solution and problem dimensions do not match")
    return float(
        (solution.walk_plan * data.Cw).sum()
        + (solution.drive0 * data.C0).sum()
        + (solution.drive1 * data.C1).sum()
    )


def split_driving_walking(
    solution: ParkingEntropicSolution,
) -> tuple[DiscreteMeasure, DiscreteMeasure, float]:
    """Driving parts of the two marginals and the driving fraction."""
    mu0_driving = solution.mu0_driving
    mu1_driving = solution.mu1_driving
    return mu0_driving, mu1_driving, float(solution.parking_measure.total_mass())
