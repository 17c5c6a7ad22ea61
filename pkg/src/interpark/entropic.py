"""Entropic-OT machinery shared by the interpolation and parking solvers.

Everything runs in the log domain: potentials instead of scaling factors,
log-sum-exp instead of kernel products.  With the default regularization
5e-4 and order-one costs, naive exponentials underflow, so this is not
optional.  The epsilon schedule warm-starts each stage by rescaling the
potentials so that epsilon * potential stays continuous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SolverConfig",
    "DualPotentials",
    "EntropicReport",
    "relative_entropy",
    "stabilized_update",
    "sinkhorn_standard",
    "log_masses",
    "lse",
    "one_mode_extrapolation",
]

DEFAULT_EPSILON = 5e-4
DEFAULT_SCHEDULE_START = 1e-1


def log_masses(w: np.ndarray) -> np.ndarray:
    """Elementwise log with -inf on zero entries."""
    w = np.asarray(w, dtype=float)
    out = np.full(w.shape, -np.inf)
    pos = w > 0
    out[pos] = np.log(w[pos])
    return out


def lse(a: np.ndarray, axis=None) -> np.ndarray:
    """logsumexp with max-subtraction; -inf slices give -inf, no warning.

    Hand-rolled rather than scipy's: this sits in the innermost solver
    loop and the slim version is measurably faster on small matrices.
    """
    a = np.asarray(a, dtype=float)
    if axis is None:
        m = a.max() if a.size else -np.inf
        if not np.isfinite(m):
            return m if a.size else -np.inf
        return m + np.log(np.exp(a - m).sum())
    m = a.max(axis=axis)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.exp(a - np.expand_dims(safe, axis)).sum(axis=axis))
    return np.where(np.isneginf(m), -np.inf, out)


def stabilized_update(log_weights, log_kernel) -> float:
    """log sum exp(log_weights + log_kernel) with max-subtraction.

    Exact -inf when every term vanishes; -inf entries mark zero mass.
    """
    s = np.asarray(log_weights, dtype=float) + np.asarray(log_kernel, dtype=float)
    if s.size == 0 or np.all(np.isneginf(s)):
        return float("-inf")
    return float(lse(s))


def relative_entropy(P, Q) -> float:
    """H(P|Q) = sum P*(log(P/Q) - 1), with 0*log(0) = 0.

    Returns +inf (a sentinel, not an exception) when P puts mass where Q
    vanishes.  Note the -1 inside the sum: H(P|P) = -mass(P).
    """
    P = np.asarray(P, dtype=float).ravel()
    Q = np.asarray(Q, dtype=float).ravel()
    if P.shape != Q.shape:
        raise ValueError("P and Q must share their index set")
    if np.any(P < 0) or np.any(Q < 0):
        raise ValueError("negative entries")
    pos = P > 0
    if np.any(Q[pos] == 0):
        return math.inf
    return float(np.sum(P[pos] * (np.log(P[pos] / Q[pos]) - 1.0)))


def one_mode_extrapolation(x0, x1, x2, max_factor: float = 1e4):
    """Jump along the dominant linear mode of a fixed-point iteration.

    Given three equally spaced iterates, estimates the contraction rate
    by projecting the last difference on the previous one and
    extrapolates to the predicted limit.  Returns None when the
    estimate is unusable (non-contracting or noise-dominated).
    """
    d0 = x1 - x0
    d1 = x2 - x1
    den = float(d0 @ d0)
    if not np.isfinite(den) or den == 0.0:
        return None
    rho = float(d1 @ d0) / den
    if not (0.0 < rho < 1.0):
        return None
    factor = min(rho / (1.0 - rho), max_factor)
    cand = x2 + factor * d1
    return cand if np.all(np.isfinite(cand)) else None


@dataclass(frozen=True)
class SolverConfig:
    """Regularization, iteration budget, and convergence tolerance.

    epsilon_schedule, when given, must decrease strictly and end at
    epsilon; by default the solver halves from schedule_start down to
    epsilon.  max_iter bounds the iterations spent per schedule stage;
    stage_tol is the (looser) exit tolerance of intermediate stages.
    accel_lag spaces the snapshots used for tail extrapolation
    (0 disables it).
    """

    epsilon: float = DEFAULT_EPSILON
    max_iter: int = 5000
    marginal_tol: float = 1e-7
    epsilon_schedule: tuple[float, ...] | None = None
    schedule_start: float = DEFAULT_SCHEDULE_START
    stage_tol: float = 1e-6
    check_every: int = 10
    accel_lag: int = 100

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not (self.marginal_tol > 0):
            raise ValueError("marginal_tol must be positive")
        if self.epsilon_schedule is not None:
            sched = tuple(float(e) for e in self.epsilon_schedule)
            if any(e2 >= e1 for e1, e2 in zip(sched, sched[1:])):
                raise ValueError("epsilon_schedule must decrease strictly")
            if not sched or not math.isclose(sched[-1], self.epsilon, rel_tol=1e-12):
                raise ValueError("epsilon_schedule must end at epsilon")
            object.__setattr__(self, "epsilon_schedule", sched)

    def resolved_schedule(self) -> tuple[float, ...]:
        if self.epsilon_schedule is not None:
            return self.epsilon_schedule
        if self.epsilon >= self.schedule_start:
            return (self.epsilon,)
        sched = []
        e = self.schedule_start
        while e > self.epsilon * (1 + 1e-12):
            sched.append(e)
            e *= 0.5
        sched.append(self.epsilon)
        return tuple(sched)


@dataclass(frozen=True)
class DualPotentials:
    """phi potentials on the outer marginals, psi on the pivot cells."""

    phi0: np.ndarray
    phi1: np.ndarray
    psi0: np.ndarray | None = None
    psi1: np.ndarray | None = None


@dataclass(frozen=True)
class EntropicReport:
    """Convergence record of one entropic solve.

    primal_cost is the unregularized transport cost of the returned
    plans; entropic_objective is the relative-entropy objective (which
    carries the -1 convention and is reported separately for that
    reason).  primal_trace holds primal_cost at the end of each epsilon
    stage.
    """

    primal_cost: float
    entropic_objective: float
    marginal_violation_l1: float
    iterations_used: int
    converged: bool
    epsilon: float
    primal_trace: tuple[float, ...] = ()
    plan: np.ndarray | None = None
    duals: DualPotentials | None = None


def sinkhorn_standard(cost: np.ndarray, a, b, config: SolverConfig | None = None) -> EntropicReport:
    """Entropic OT between two histograms with reference measure a (x) b.

    Alternating log-domain potential updates; converged when the L1
    marginal violation drops below config.marginal_tol.  Non-convergence
    is reported, not raised.
    """
    if config is None:
        config = SolverConfig()
    C = np.asarray(cost, dtype=float)
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n, m = C.shape
    if a.shape[0] != n or b.shape[0] != m:
        raise ValueError("marginal sizes do not match the cost matrix")
    if not np.all(np.isfinite(C)):
        raise ValueError("non-finite costs")
    la = log_masses(a)
    lb = log_masses(b)

    phi = np.zeros(n)
    psi = np.zeros(m)
    schedule = config.resolved_schedule()
    iterations = 0
    primal_trace = []
    violation = np.inf
    prev_eps = None
    for stage, eps in enumerate(schedule):
        if prev_eps is not None:
            scale = prev_eps / eps
            phi = phi * scale
            psi = psi * scale
        prev_eps = eps
        logk = -C / eps
        tol = config.marginal_tol if stage == len(schedule) - 1 else max(
            config.marginal_tol, config.stage_tol
        )
        for it in range(config.max_iter):
            phi = -lse(logk + (lb + psi)[None, :], axis=1)
            phi[np.isposinf(phi)] = 0.0  # rows of zero mass carry no constraint
            psi = -lse(logk + (la + phi)[:, None], axis=0)
            psi[np.isposinf(psi)] = 0.0
            iterations += 1
            if (it + 1) % config.check_every == 0 or it == config.max_iter - 1:
                logplan = (la + phi)[:, None] + (lb + psi)[None, :] + logk
                with np.errstate(over="ignore"):
                    plan = np.exp(logplan)
                violation = float(
                    np.abs(plan.sum(axis=1) - a).sum() + np.abs(plan.sum(axis=0) - b).sum()
                )
                if violation <= tol:
                    break
        logplan = (la + phi)[:, None] + (lb + psi)[None, :] + logk
        plan = np.exp(logplan)
        primal_trace.append(float((plan * C).sum()))

    primal = primal_trace[-1]
    mass = plan.sum()
    pos = plan > 0
    entropic = float((plan[pos] * (phi[:, None] + psi[None, :])[pos]).sum() - mass)
    violation = float(np.abs(plan.sum(axis=1) - a).sum() + np.abs(plan.sum(axis=0) - b).sum())
    return EntropicReport(
        primal_cost=primal,
        entropic_objective=entropic,
        marginal_violation_l1=violation,
        iterations_used=iterations,
        converged=bool(violation <= config.marginal_tol),
        epsilon=config.epsilon,
        primal_trace=tuple(primal_trace),
        plan=plan,
        duals=DualPotentials(phi0=phi, phi1=psi),
    )
