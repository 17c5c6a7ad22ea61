"""Preset problem setups for the experiment runner.

Each preset builds a ready-to-solve problem: the 1D interpolation
examples on [0,6] (distance and quadratic costs, support and density
constraints), the square-obstacle example with a corner atom, the
two-Dirac parking instances with their analytic level-set solutions,
and the unit-square interpolation/parking family at p in
{0.25, 0.75, 1, 2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .costs import CostSpec
from .entropic import SolverConfig
from .interpolation import InterpolationProblem
from .measures import (
    Density,
    DensityBound,
    DiscreteMeasure,
    Free,
    GridSpec,
    Support,
    bound_from_constant,
    box_mask,
    build_grid,
    mask_from_predicate,
    measure_from_density,
    measure_from_points,
)
from .parking import ParkingProblem

__all__ = ["PRESETS", "RunSetup", "build_preset", "preset_names"]


@dataclass
class RunSetup:
    """A fully built problem plus the metadata echoed into run outputs."""

    kind: str  # "interpolate" | "park" | "analytic"
    problem: InterpolationProblem | ParkingProblem | None = None
    analytic: dict | None = None
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _Preset:
    kind: str
    builder: Callable[..., RunSetup]
    description: str
    default_grid: tuple[int, int]


def _config(epsilon, max_iter, marginal_tol) -> SolverConfig:
    kw = {}
    if epsilon is not None:
        kw["epsilon"] = epsilon
    if max_iter is not None:
        kw["max_iter"] = max_iter
    if marginal_tol is not None:
        kw["marginal_tol"] = marginal_tol
    return SolverConfig(**kw)


def _line_grid(nx: int) -> GridSpec:
    return build_grid(((0.0, 6.0), (0.0, 1.0)), nx, 1)


def _line_measures(grid: GridSpec) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    mu0 = measure_from_density(grid, lambda X, Y: (X <= 1.0).astype(float), True)
    mu1 = measure_from_density(grid, lambda X, Y: (X >= 5.0).astype(float), True)
    return mu0, mu1


def _interp_1d(t, p, constraint_builder, meta_extra):
    def build(grid_shape, epsilon, max_iter, marginal_tol):
        grid = _line_grid(grid_shape[0])
        mu0, mu1 = _line_measures(grid)
        constraint = constraint_builder(grid)
        problem = InterpolationProblem(
            mu0,
            mu1,
            CostSpec(p, 1.0 - t),
            CostSpec(p, t),
            grid,
            constraint,
            _config(epsilon, max_iter, marginal_tol),
        )
        meta = {"t": t, "p": p, **meta_extra}
        return RunSetup(kind="interpolate", problem=problem, meta=meta)

    return build


def _density_on_window(theta: float):
    def make(grid: GridSpec):
        X = grid.meshgrid()[0]
        return Density(DensityBound(grid, np.where((X >= 2.0) & (X <= 4.0), theta, 0.0)))

    return make


def _square_example(grid_shape, epsilon, max_iter, marginal_tol):
    """Quadratic costs, diamond-shaped constraint between a Dirac and a ball."""
    nx, ny = grid_shape
    pivot_grid = build_grid(((-1.0, 1.0), (-1.0, 1.0)), nx, ny)
    mask = mask_from_predicate(pivot_grid, lambda X, Y: np.abs(X) + np.abs(Y) <= 1.0 + 1e-12)
    mu0 = measure_from_points([[-2.0, 0.0]], [1.0])
    ball_n = max(24, min(48, nx // 2))
    ball_grid = build_grid(((2.0, 4.0), (2.0 - 3.0, 4.0 - 3.0)), ball_n, ball_n)
    mu1 = measure_from_density(
        ball_grid, lambda X, Y: ((X - 3.0) ** 2 + Y**2 <= 1.0).astype(float), True
    )
    problem = InterpolationProblem(
        mu0,
        mu1,
        CostSpec(2.0, 1.0),
        CostSpec(2.0, 2.0),
        pivot_grid,
        Support(mask),
        _config(epsilon, max_iter, marginal_tol),
    )
    return RunSetup(
        kind="interpolate",
        problem=problem,
        meta={"p": 2.0, "lam": 2.0, "mask": "diamond |x|+|y|<=1"},
    )


def _unit_square_data():
    nu1 = measure_from_points([[0.5, 0.5]], [1.0])
    nu0 = measure_from_points(
        [[0.5, 0.1], [0.5, 0.9], [0.1, 0.5], [0.9, 0.5]], [0.25] * 4
    )
    return nu0, nu1


def _unit_square_interp(p: float, theta: float):
    def build(grid_shape, epsilon, max_iter, marginal_tol):
        nx, ny = grid_shape
        grid = build_grid(((0.0, 1.0), (0.0, 1.0)), nx, ny)
        mu0, mu1 = _unit_square_data()
        problem = InterpolationProblem(
            mu0,
            mu1,
            CostSpec(p, 1.0),
            CostSpec(p, 1.5),
            grid,
            Density(bound_from_constant(grid, theta)),
            _config(epsilon, max_iter, marginal_tol),
        )
        return RunSetup(
            kind="interpolate", problem=problem, meta={"p": p, "lam": 1.5, "theta": theta}
        )

    return build


def _unit_square_park(p: float, theta: float):
    def build(grid_shape, epsilon, max_iter, marginal_tol):
        nx, ny = grid_shape
        grid = build_grid(((0.0, 1.0), (0.0, 1.0)), nx, ny)
        nu0, nu1 = _unit_square_data()
        problem = ParkingProblem(
            nu0,
            nu1,
            CostSpec(p, 1.0),
            CostSpec(p, 1.5),
            grid,
            Density(bound_from_constant(grid, theta)),
            _config(epsilon, max_iter, marginal_tol),
        )
        return RunSetup(kind="park", problem=problem, meta={"p": p, "lam": 1.5, "theta": theta})

    return build


_PARK_BOX = ((-1.1, 1.4), (-1.25, 1.25))


def _dirac_parking(p: float, lam: float, x0_norm: float):
    def build(grid_shape, epsilon, max_iter, marginal_tol):
        nx, ny = grid_shape
        grid = build_grid(_PARK_BOX, nx, ny)
        nu0 = measure_from_points([[x0_norm, 0.0]], [1.0])
        nu1 = measure_from_points([[0.0, 0.0]], [1.0])
        problem = ParkingProblem(
            nu0,
            nu1,
            CostSpec(p, 1.0),
            CostSpec(p, lam),
            grid,
            Density(bound_from_constant(grid, 1.0)),
            _config(epsilon, max_iter, marginal_tol),
        )
        return RunSetup(
            kind="park",
            problem=problem,
            meta={"p": p, "lam": lam, "x0_norm": x0_norm, "cap": 1.0},
        )

    return build


def _analytic_parking(p: float, lam: float, x0_norm: float):
    def build(grid_shape, epsilon, max_iter, marginal_tol):
        nx, ny = grid_shape
        grid = build_grid(((-1.6, 1.6), (-1.6, 1.6)), nx, ny)
        return RunSetup(
            kind="analytic",
            analytic={"p": p, "lam": lam, "x0": (x0_norm, 0.0), "cap": 1.0, "grid": grid},
            meta={"p": p, "lam": lam, "x0_norm": x0_norm, "cap": 1.0},
        )

    return build


PRESETS: dict[str, _Preset] = {
    "example-2.1-distance-t0.3": _Preset(
        "interpolate",
        _interp_1d(0.3, 1.0, lambda g: Free(), {"constraint": "free"}),
        "1D distance costs, t=0.3; optimal pivot is mu0",
        (300, 1),
    ),
    "example-2.1-distance-t0.7": _Preset(
        "interpolate",
        _interp_1d(0.7, 1.0, lambda g: Free(), {"constraint": "free"}),
        "1D distance costs, t=0.7; optimal pivot is mu1",
        (300, 1),
    ),
    "example-2.1-quadratic-t0.3": _Preset(
        "interpolate",
        _interp_1d(0.3, 2.0, lambda g: Free(), {"constraint": "free"}),
        "1D quadratic geodesic at t=0.3; pivot uniform on [1.5, 2.5]",
        (300, 1),
    ),
    "example-2.1-quadratic-t0.5": _Preset(
        "interpolate",
        _interp_1d(0.5, 2.0, lambda g: Free(), {"constraint": "free"}),
        "1D quadratic geodesic at t=0.5; pivot uniform on [2.5, 3.5]",
        (300, 1),
    ),
    "example-2.1-support-t0.3": _Preset(
        "interpolate",
        _interp_1d(
            0.3, 2.0, lambda g: Support(box_mask(g, ((2.0, 4.0), (0.0, 1.0)))), {"K": "[2,4]"}
        ),
        "1D quadratic with support constraint [2,4]; atom at 2 plus uniform part",
        (300, 1),
    ),
    "example-2.1-density-t0.3": _Preset(
        "interpolate",
        _interp_1d(0.3, 1.0, _density_on_window(0.75), {"theta": 0.75}),
        "1D distance with density cap 0.75 on [2,4]; pivot = 0.75 on [2, 2+4/3]",
        (300, 1),
    ),
    "example-4-square": _Preset(
        "interpolate",
        _square_example,
        "Dirac to ball through a diamond obstacle; corner atom at (1,0)",
        (128, 128),
    ),
    "fig1-left": _Preset(
        "analytic", _analytic_parking(2.0, 2.0, 1.0), "p=2, lam=2, |x0|=1: alpha=1", (640, 640)
    ),
    "fig1-right": _Preset(
        "analytic",
        _analytic_parking(2.0, 2.0, 0.5),
        "p=2, lam=2, |x0|=0.5: alpha=pi/9",
        (640, 640),
    ),
    "fig2-left": _Preset(
        "analytic",
        _analytic_parking(1.0, 2.0, 1.0),
        "p=1, lam=2, |x0|=1: alpha about 0.97",
        (640, 640),
    ),
    "fig2-right": _Preset(
        "analytic",
        _analytic_parking(1.0, 2.0, 0.5),
        "p=1, lam=2, |x0|=0.5: alpha about 0.24",
        (640, 640),
    ),
    "parking-dirac-p2-x05": _Preset(
        "park", _dirac_parking(2.0, 2.0, 0.5), "entropic run of fig1-right", (200, 200)
    ),
    "parking-dirac-p2-x10": _Preset(
        "park", _dirac_parking(2.0, 2.0, 1.0), "entropic run of fig1-left", (200, 200)
    ),
    "parking-dirac-p1-x05": _Preset(
        "park", _dirac_parking(1.0, 2.0, 0.5), "entropic run of fig2-right", (200, 200)
    ),
    "parking-dirac-p1-x10": _Preset(
        "park", _dirac_parking(1.0, 2.0, 1.0), "entropic run of fig2-left", (200, 200)
    ),
}

for _p, _fig in ((0.25, "fig4"), (0.75, "fig5"), (1.0, "fig6"), (2.0, "fig7")):
    PRESETS[f"{_fig}-interpolation"] = _Preset(
        "interpolate",
        _unit_square_interp(_p, 2.0),
        f"unit-square interpolation, p={_p}, cap 2",
        (128, 128),
    )
    PRESETS[f"{_fig}-parking"] = _Preset(
        "park",
        _unit_square_park(_p, 2.0),
        f"unit-square parking, p={_p}, cap 2",
        (128, 128),
    )


def preset_names() -> list[str]:
    return sorted(PRESETS)


def build_preset(
    name: str,
    grid_shape: tuple[int, int] | None = None,
    epsilon: float | None = None,
    max_iter: int | None = None,
    marginal_tol: float | None = None,
) -> RunSetup:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    preset = PRESETS[name]
    shape = grid_shape if grid_shape is not None else preset.default_grid
    setup = preset.builder(shape, epsilon, max_iter, marginal_tol)
    setup.meta = {"preset": name, "grid": f"{shape[0]}x{shape[1]}", **setup.meta}
    return setup
