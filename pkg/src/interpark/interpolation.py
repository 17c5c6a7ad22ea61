"""Entropic solver for Wasserstein interpolation with pivot constraints.

The pivot measure is never a variable of the iteration: it is read off
the dual potentials through the geometric mean of the two one-sided
pivot marginals.  Support constraints enter through the reference
measures (cell-area-weighted Lebesgue factors restricted to the mask);
density constraints add a second pair of potentials whose update caps
the current pivot iterate at the bound, cellwise and in mass units.
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
from .measures import (
    Density,
    DiscreteMeasure,
    Free,
    GridSpec,
    Support,
)

__all__ = [
    "InterpolationProblem",
    "InterpolationSolution",
    "solve_interpolation",
    "pivot_from_duals",
    "dual_objective_interpolation",
]


@dataclass(frozen=True)
class InterpolationProblem:
    """Two endpoint probabilities, two cost legs, and a constrained pivot grid."""

    mu0: DiscreteMeasure
    mu1: DiscreteMeasure
    cost0: CostSpec
    cost1: CostSpec
    pivot_grid: GridSpec
    constraint: Free | Support | Density = Free()
    config: SolverConfig = SolverConfig()

    def __post_init__(self):
        for name, m in (("mu0", self.mu0), ("mu1", self.mu1)):
            if not m.is_probability(tol=1e-9):
                raise ValueError(f"{name} must be a probability measure")
        if isinstance(self.constraint, Support):
            if self.constraint.mask.grid != self.pivot_grid:
                raise ValueError("support mask lives on a different grid")
        if isinstance(self.constraint, Density):
            if self.constraint.bound.grid != self.pivot_grid:
                raise ValueError("density bound lives on a different grid")
            if self.constraint.bound.total_cap_mass <= 1.0:
                raise ValueError("infeasible density bound: total cap mass must exceed 1")


@dataclass(frozen=True)
class InterpolationSolution:
    """Converged (or best-effort) plans, pivot, and dual certificates.

    gamma0 has shape (n0, n_active) and gamma1 (n_active, n1), where
    active_cells are the flat grid indices the constraint admits; the
    pivot measure is defined on the full grid with zeros elsewhere.
    """

    pivot: DiscreteMeasure
    gamma0: np.ndarray
    gamma1: np.ndarray
    active_cells: np.ndarray
    duals: DualPotentials
    primal_value: float
    dual_value: float
    report: EntropicReport


class _ProblemData:
    """Arrays shared by every epsilon stage of one solve."""

    def __init__(self, problem: InterpolationProblem):
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
        self.logw0 = log_masses(problem.mu0.weights)
        self.logw1 = log_masses(problem.mu1.weights)
        self.w0 = problem.mu0.weights
        self.w1 = problem.mu1.weights
        self.C0 = cost_matrix(problem.cost0, problem.mu0.points, self.cells)
        self.C1 = cost_matrix(problem.cost1, self.cells, problem.mu1.points)
        self.density = isinstance(constraint, Density)

    def kernels(self, eps: float) -> tuple[np.ndarray, np.ndarray]:
        """Log reference kernels with the Lebesgue cell weight folded in."""
        return (-self.C0 / eps + self.log_area, -self.C1 / eps + self.log_area)


def _pre_marginals(data, logr0, logr1, phi0, phi1):
    """Log pivot marginals of the two plans, without the psi factors."""
    a0 = lse((data.logw0 + phi0)[:, None] + logr0, axis=0)
    a1 = lse(logr1 + (data.logw1 + phi1)[None, :], axis=1)
    return a0, a1


def _violation(data, logr0, logr1, phi0, phi1, psi0, psi1):
    row0 = data.logw0 + phi0 + lse(logr0 + psi0[None, :], axis=1)
    col1 = data.logw1 + phi1 + lse(logr1 + psi1[:, None], axis=0)
    a0, a1 = _pre_marginals(data, logr0, logr1, phi0, phi1)
    with np.errstate(over="ignore"):
        m0 = np.exp(psi0 + a0)
        m1 = np.exp(psi1 + a1)
        v = float(np.abs(np.exp(row0) - data.w0).sum())
        v += float(np.abs(np.exp(col1) - data.w1).sum())
        v += float(np.abs(m0 - m1).sum())
        if data.logcap is not None:
            capmass = np.exp(data.logcap)
            v += float(np.clip(m0 - capmass, 0, None).sum())
            v += float(np.clip(m1 - capmass, 0, None).sum())
    return v


def _psi_pair(a0, a1, logcap):
    """Joint update of (psi0, psi1): cap the geometric-mean pivot.

    This is the exact coordinate-ascent step in the (psi0, psi1) block:
    both plans get pivot marginal min(sqrt(a0*a1), capmass), and
    psi0 + psi1 is zero wherever the cap is inactive (the dual-optimal
    complementary slackness), nonpositive where it saturates.
    """
    target = 0.5 * (a0 + a1)
    if logcap is not None:
        target = np.minimum(target, logcap)
    return target - a0, target - a1


def _sweep(data, logr0, logr1, phi0, phi1, psi0, psi1):
    """One outer iteration; returns updated potentials.

    Density case: phi0, psi pair, phi1, psi pair, recomputing the pivot
    estimate from the current potentials before each psi step.
    Free/support case: one psi pair per sweep with the cap absent.
    """
    phi0 = -lse(logr0 + psi0[None, :], axis=1)
    if data.density:
        a0, a1 = _pre_marginals(data, logr0, logr1, phi0, phi1)
        psi0, psi1 = _psi_pair(a0, a1, data.logcap)
        phi1 = -lse(logr1 + psi1[:, None], axis=0)
        a1 = lse(logr1 + (data.logw1 + phi1)[None, :], axis=1)
        psi0, psi1 = _psi_pair(a0, a1, data.logcap)
    else:
        phi1 = -lse(logr1 + psi1[:, None], axis=0)
        a0, a1 = _pre_marginals(data, logr0, logr1, phi0, phi1)
        psi0, psi1 = _psi_pair(a0, a1, None)
    return phi0, phi1, psi0, psi1


def _plans(data, logr0, logr1, phi0, phi1, psi0, psi1):
    log_g0 = (data.logw0 + phi0)[:, None] + psi0[None, :] + logr0
    log_g1 = psi1[:, None] + (data.logw1 + phi1)[None, :] + logr1
    with np.errstate(over="ignore"):
        return np.exp(log_g0), np.exp(log_g1)


def _safe_ratio(target, current):
    out = np.ones_like(target)
    pos = current > 0
    out[pos] = target[pos] / current[pos]
    return out


def _round_plans(data, g0, g1):
    """Project the plans onto the exact marginal constraints.

    Scales rows/columns down to the targets, equalizes the pivot
    marginals at their minimum, and restores the lost mass along the
    pivot profile.  The output is feasible to machine precision, which
    makes the primal objective a certified upper bound on the dual.
    """
    g0 = g0 * np.minimum(1.0, _safe_ratio(data.w0, g0.sum(axis=1)))[:, None]
    g1 = g1 * np.minimum(1.0, _safe_ratio(data.w1, g1.sum(axis=0)))[None, :]
    m0 = g0.sum(axis=0)
    m1 = g1.sum(axis=1)
    mu = np.minimum(m0, m1)
    if data.logcap is not None:
        capmass = np.exp(data.logcap)
        mu = np.minimum(mu, capmass)
    g0 = g0 * _safe_ratio(mu, m0)[None, :]
    g1 = g1 * _safe_ratio(mu, m1)[:, None]
    d0 = np.clip(data.w0 - g0.sum(axis=1), 0.0, None)
    d1 = np.clip(data.w1 - g1.sum(axis=0), 0.0, None)
    if data.logcap is not None:
        # restore mass in the cap slack so the pivot stays feasible
        slack = capmass - mu
        q = slack / slack.sum()
    else:
        total = mu.sum()
        q = mu / total if total > 0 else np.full(mu.shape, 1.0 / len(mu))
    g0 = g0 + np.outer(d0, q)
    g1 = g1 + np.outer(q, d1)
    return g0, g1


def solve_interpolation(problem: InterpolationProblem) -> InterpolationSolution:
    data = _ProblemData(problem)
    config = problem.config
    schedule = config.resolved_schedule()

    n0 = problem.mu0.n
    n1 = problem.mu1.n
    M = len(data.active)
    phi0 = np.zeros(n0)
    phi1 = np.zeros(n1)
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
        logr0, logr1 = data.kernels(eps)
        last = stage == len(schedule) - 1
        tol = config.marginal_tol if last else max(config.marginal_tol, config.stage_tol)
        snaps: list[np.ndarray] = []
        for it in range(config.max_iter):
            phi0, phi1, psi0, psi1 = _sweep(data, logr0, logr1, phi0, phi1, psi0, psi1)
            iterations += 1
            if (it + 1) % config.check_every == 0 or it == config.max_iter - 1:
                violation = _violation(data, logr0, logr1, phi0, phi1, psi0, psi1)
                if violation <= tol:
                    break
            if config.accel_lag and (it + 1) % config.accel_lag == 0:
                snaps.append(np.concatenate([phi0, phi1, psi0, psi1]))
                if len(snaps) == 3:
                    cand = one_mode_extrapolation(*snaps)
                    snaps = []
                    if cand is not None:
                        before = _violation(data, logr0, logr1, phi0, phi1, psi0, psi1)
                        parts = np.split(cand, [n0, n0 + n1, n0 + n1 + M])
                        trial = _sweep(data, logr0, logr1, *parts)
                        iterations += 1
                        after = _violation(data, logr0, logr1, *trial)
                        if after < before:
                            phi0, phi1, psi0, psi1 = trial
        g0, g1 = _plans(data, logr0, logr1, phi0, phi1, psi0, psi1)
        primal_trace.append(float((g0 * data.C0).sum() + (g1 * data.C1).sum()))

    violation = _violation(data, logr0, logr1, phi0, phi1, psi0, psi1)
    duals = DualPotentials(phi0=phi0, phi1=phi1, psi0=psi0, psi1=psi1)
    g0, g1 = _plans(data, logr0, logr1, phi0, phi1, psi0, psi1)
    g0, g1 = _round_plans(data, g0, g1)
    primal = float((g0 * data.C0).sum() + (g1 * data.C1).sum())
    dual = _dual_objective(data, duals, logr0, logr1)
    entropic = _entropy_objective(data, logr0, logr1, g0, g1)
    w = np.zeros(data.grid.n_cells)
    w[data.active] = g0.sum(axis=0)
    pivot = DiscreteMeasure(data.grid.centers(), w, data.grid)
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
    return InterpolationSolution(
        pivot=pivot,
        gamma0=g0,
        gamma1=g1,
        active_cells=data.active,
        duals=duals,
        primal_value=primal,
        dual_value=dual,
        report=report,
    )


def _entropy_objective(data, logr0, logr1, g0, g1) -> float:
    """H(g0|R0) + H(g1|R1) evaluated directly on (possibly rounded) plans."""
    logR0 = data.logw0[:, None] + logr0
    logR1 = data.logw1[None, :] + logr1
    total = 0.0
    for g, logR in ((g0, logR0), (g1, logR1)):
        pos = g > 0
        total += float((g[pos] * (np.log(g[pos]) - logR[pos])).sum() - g.sum())
    return total


def pivot_from_duals(
    duals: DualPotentials,
    problem: InterpolationProblem,
    epsilon: float | None = None,
    _data: _ProblemData | None = None,
) -> DiscreteMeasure:
    """Geometric mean of the two one-sided pivot marginals, in log domain."""
    data = _data if _data is not None else _ProblemData(problem)
    eps = epsilon if epsilon is not None else problem.config.epsilon
    logr0, logr1 = data.kernels(eps)
    a0, a1 = _pre_marginals(data, logr0, logr1, duals.phi0, duals.phi1)
    mu = 0.5 * ((duals.psi0 + a0) + (duals.psi1 + a1))
    w = np.zeros(data.grid.n_cells)
    with np.errstate(over="ignore"):
        w[data.active] = np.exp(mu)
    return DiscreteMeasure(data.grid.centers(), w, data.grid)


def _dual_objective(data, duals, logr0, logr1) -> float:
    row0 = data.logw0 + duals.phi0 + lse(logr0 + duals.psi0[None, :], axis=1)
    col1 = data.logw1 + duals.phi1 + lse(logr1 + duals.psi1[:, None], axis=0)
    with np.errstate(over="ignore"):
        value = -float(np.exp(row0).sum()) - float(np.exp(col1).sum())
    value += float(data.w0 @ duals.phi0) + float(data.w1 @ duals.phi1)
    if data.logcap is not None:
        value += float(((duals.psi0 + duals.psi1) * np.exp(data.logcap)).sum())
    return value


def dual_objective_interpolation(
    duals: DualPotentials,
    problem: InterpolationProblem,
    epsilon: float | None = None,
) -> float:
    """Entropic dual objective at the given potentials.

    Density case adds the cap term sum (psi0+psi1)*capmass; in the free
    and support cases that term is absent and dual feasibility pins the
    gauge psi0 = -psi1.
    """
    data = _ProblemData(problem)
    eps = epsilon if epsilon is not None else problem.config.epsilon
    logr0, logr1 = data.kernels(eps)
    return _dual_objective(data, duals, logr0, logr1)
