"""Config-driven experiment runner with deterministic file outputs.

Subcommands: interpolate, park (entropic solvers), oracle (exact
reduction on the same presets), analytic (level-set parking regions),
and compare (entropic run vs oracle run).  Exit codes: 0 on success and
convergence, 2 on non-convergence or a failed comparison, 1 on input
errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .costs import cost_matrix
from .diagnostics import (
    bang_bang_fraction,
    boundary_mass_fraction,
    interior_density_bound_check,
)
from .exact_oracles import (
    alpha_closed_form_p2,
    interpolation_via_reduction,
    parking_level_set,
    parking_via_reduction,
)
from .interpolation import InterpolationProblem, solve_interpolation
from .measures import Density, DiscreteMeasure, Support
from .parking import solve_parking
from .presets import build_preset, preset_names
from .serialize import (
    grid_measure_to_text,
    measure_to_csv,
    plan_to_csv,
    read_summary,
    write_manifest,
    write_pgm,
    write_summary,
)

__all__ = ["main"]

_CONFIG_KEYS = {
    "command",
    "preset",
    "out",
    "epsilon",
    "grid",
    "max_iter",
    "marginal_tol",
    "seed",
}


class InputError(Exception):
    pass


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        nx, _, ny = text.lower().partition("x")
        return int(nx), int(ny)
    except ValueError as exc:
        raise InputError(f"bad grid spec {text!r}, expected NXxNY") from exc


def parse_config_file(path) -> dict:
    """Flat `key = value` lines, # comments; unknown keys are errors."""
    out = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise InputError(f"{path}:{ln}: expected 'key = value'")
        if key not in _CONFIG_KEYS:
            raise InputError(f"{path}:{ln}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _merge_options(args) -> dict:
    opts: dict = {}
    if getattr(args, "config", None):
        opts.update(parse_config_file(args.config))
    for key in ("preset", "out", "epsilon", "grid", "max_iter", "marginal_tol", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if "epsilon" in opts:
        opts["epsilon"] = float(opts["epsilon"])
    if "max_iter" in opts:
        opts["max_iter"] = int(opts["max_iter"])
    if "marginal_tol" in opts:
        opts["marginal_tol"] = float(opts["marginal_tol"])
    if "seed" in opts:
        opts["seed"] = int(opts["seed"])
    if "grid" in opts and isinstance(opts["grid"], str):
        opts["grid"] = _parse_grid(opts["grid"])
    return opts


def _setup_from_options(opts, command: str):
    preset = opts.get("preset")
    if not preset:
        raise InputError("a --preset (or config 'preset') is required")
    setup = build_preset(
        preset,
        grid_shape=opts.get("grid"),
        epsilon=opts.get("epsilon"),
        max_iter=opts.get("max_iter"),
        marginal_tol=opts.get("marginal_tol"),
    )
    if command in ("interpolate", "park") and setup.kind != command:
        raise InputError(f"preset {preset!r} is a {setup.kind!r} preset, not {command!r}")
    if command == "oracle" and setup.kind not in ("interpolate", "park"):
        raise InputError(f"preset {preset!r} has no oracle form")
    if command == "analytic" and setup.kind != "analytic":
        raise InputError(f"preset {preset!r} is not an analytic preset")
    return setup


def _outdir(opts, command) -> Path:
    out = Path(opts.get("out") or Path("interpark-out") / f"{opts['preset']}-{command}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid_measure(problem, weights_full) -> DiscreteMeasure:
    grid = problem.pivot_grid
    return DiscreteMeasure(grid.centers(), weights_full, grid)


def _active_to_full(problem, active, weights_active) -> np.ndarray:
    w = np.zeros(problem.pivot_grid.n_cells)
    w[active] = weights_active
    return w


def _plan_triples_full(plan, active) -> list[tuple[int, int, float]]:
    rows, cols = np.nonzero(plan)
    return [(int(i), int(active[j]), float(plan[i, j])) for i, j in zip(rows, cols)]


def _write_plan(path, plan, col_map=None, row_map=None):
    rows, cols = np.nonzero(plan)
    lines = ["i,j,mass"]
    for i, j in zip(rows, cols):
        ii = int(row_map[i]) if row_map is not None else int(i)
        jj = int(col_map[j]) if col_map is not None else int(j)
        lines.append(f"{ii},{jj},{plan[i, j]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def _diagnostics_csv(path, preset, kind, entries: dict):
    cols = [
        "preset",
        "kind",
        "bang_bang",
        "boundary_mass",
        "duality_gap",
        "marginal_violation",
        "interior_density_ratio",
    ]
    vals = [preset, kind] + [
        ("" if entries.get(c) is None else f"{entries[c]:.17g}")
        for c in cols[2:]
    ]
    Path(path).write_text(",".join(cols) + "\n" + ",".join(vals) + "\n")


def _run_interpolate(setup, outdir) -> int:
    problem = setup.problem
    sol = solve_interpolation(problem)
    grid = problem.pivot_grid
    files = []

    measure_to_csv(sol.pivot, outdir / "pivot.csv")
    files.append("pivot.csv")
    grid_measure_to_text(sol.pivot, outdir / "pivot_grid.txt")
    files.append("pivot_grid.txt")
    norm = write_pgm(sol.pivot.density(), outdir / "pivot.pgm")
    files.append("pivot.pgm")
    _write_plan(outdir / "gamma0.csv", sol.gamma0, col_map=sol.active_cells)
    files.append("gamma0.csv")
    _write_plan(outdir / "gamma1.csv", sol.gamma1, row_map=sol.active_cells)
    files.append("gamma1.csv")

    gap = sol.report.entropic_objective - sol.dual_value
    diag = {
        "duality_gap": gap,
        "marginal_violation": sol.report.marginal_violation_l1,
    }
    constraint = problem.constraint
    if isinstance(constraint, Density):
        diag["bang_bang"] = bang_bang_fraction(sol.pivot, constraint.bound.cap.ravel())
    if isinstance(constraint, Support):
        diag["boundary_mass"] = boundary_mass_fraction(sol.pivot, constraint.mask)
        if (
            problem.cost0.exponent == 2
            and problem.cost1.exponent == 2
            and problem.mu0.grid is not None
        ):
            diag["interior_density_ratio"] = interior_density_bound_check(
                sol.pivot, problem.mu0, problem.cost0, problem.cost1, constraint.mask
            )
    _diagnostics_csv(outdir / "diagnostics.csv", setup.meta["preset"], "interpolate", diag)
    files.append("diagnostics.csv")

    write_summary(
        outdir / "summary.txt",
        {
            **setup.meta,
            "command": "interpolate",
            "epsilon": problem.config.epsilon,
            "converged": sol.report.converged,
            "iterations": sol.report.iterations_used,
            "marginal_violation": sol.report.marginal_violation_l1,
            "primal_value": sol.primal_value,
            "dual_value": sol.dual_value,
            "entropic_objective": sol.report.entropic_objective,
            "duality_gap": gap,
            "pivot_mass": sol.pivot.total_mass(),
            "pgm_normalization": norm,
            "primal_trace": " ".join(f"{v:.12g}" for v in sol.report.primal_trace),
        },
    )
    files.append("summary.txt")
    write_manifest(outdir, files)
    return 0 if sol.report.converged else 2


def _run_park(setup, outdir) -> int:
    problem = setup.problem
    sol = solve_parking(problem)
    files = []

    measure_to_csv(sol.parking_measure, outdir / "parking.csv")
    files.append("parking.csv")
    grid_measure_to_text(sol.parking_measure, outdir / "parking_grid.txt")
    files.append("parking_grid.txt")
    norm = write_pgm(sol.parking_measure.density(), outdir / "parking.pgm")
    files.append("parking.pgm")
    _write_plan(outdir / "walk.csv", sol.walk_plan)
    files.append("walk.csv")
    _write_plan(outdir / "drive0.csv", sol.drive0, col_map=sol.active_cells)
    files.append("drive0.csv")
    _write_plan(outdir / "drive1.csv", sol.drive1, row_map=sol.active_cells)
    files.append("drive1.csv")

    gap = sol.report.entropic_objective - sol.dual_value
    diag = {
        "duality_gap": gap,
        "marginal_violation": sol.report.marginal_violation_l1,
    }
    constraint = problem.constraint
    if isinstance(constraint, Density) and sol.alpha > 1e-9:
        diag["bang_bang"] = bang_bang_fraction(
            sol.parking_measure, constraint.bound.cap.ravel()
        )
    if isinstance(constraint, Support):
        diag["boundary_mass"] = boundary_mass_fraction(sol.parking_measure, constraint.mask)
    _diagnostics_csv(outdir / "diagnostics.csv", setup.meta["preset"], "park", diag)
    files.append("diagnostics.csv")

    cells = problem.pivot_grid.centers()[sol.active_cells]
    walk_cost = float(
        (sol.walk_plan * cost_matrix(problem.cost1, problem.nu0.points, problem.nu1.points)).sum()
    )
    drive0_cost = float((sol.drive0 * cost_matrix(problem.cost0, problem.nu0.points, cells)).sum())
    drive1_cost = float((sol.drive1 * cost_matrix(problem.cost1, cells, problem.nu1.points)).sum())
    write_summary(
        outdir / "summary.txt",
        {
            **setup.meta,
            "command": "park",
            "epsilon": problem.config.epsilon,
            "converged": sol.report.converged,
            "iterations": sol.report.iterations_used,
            "marginal_violation": sol.report.marginal_violation_l1,
            "alpha": sol.alpha,
            "walk_mass": float(sol.walk_plan.sum()),
            "walk_cost": walk_cost,
            "drive_cost": drive0_cost,
            "parked_walk_cost": drive1_cost,
            "primal_value": sol.primal_value,
            "dual_value": sol.dual_value,
            "entropic_objective": sol.report.entropic_objective,
            "duality_gap": gap,
            "pgm_normalization": norm,
            "primal_trace": " ".join(f"{v:.12g}" for v in sol.report.primal_trace),
        },
    )
    files.append("summary.txt")
    write_manifest(outdir, files)
    return 0 if sol.report.converged else 2


def _run_oracle(setup, outdir) -> int:
    problem = setup.problem
    constraint = problem.constraint
    if isinstance(constraint, Density):
        raise InputError("exact reduction oracles support free and support constraints only")
    if isinstance(constraint, Support):
        active = constraint.mask.flat_indices()
    else:
        active = np.arange(problem.pivot_grid.n_cells)
    pivot_points = problem.pivot_grid.centers()[active]
    files = []
    if isinstance(problem, InterpolationProblem):
        value, pivot = interpolation_via_reduction(
            problem.mu0, problem.mu1, problem.cost0, problem.cost1, pivot_points
        )
        full = _grid_measure(problem, _active_to_full(problem, active, pivot.weights))
        measure_to_csv(full, outdir / "pivot.csv")
        files.append("pivot.csv")
        grid_measure_to_text(full, outdir / "pivot_grid.txt")
        files.append("pivot_grid.txt")
        norm = write_pgm(full.density(), outdir / "pivot.pgm")
        files.append("pivot.pgm")
        summary = {
            **setup.meta,
            "command": "oracle",
            "oracle": "interpolation_via_reduction",
            "value": value,
            "pivot_mass": full.total_mass(),
            "pgm_normalization": norm,
        }
    else:
        sol = parking_via_reduction(
            problem.nu0, problem.nu1, problem.cost0, problem.cost1, pivot_points
        )
        full = _grid_measure(
            problem, _active_to_full(problem, active, sol.parking_measure.weights)
        )
        measure_to_csv(full, outdir / "parking.csv")
        files.append("parking.csv")
        grid_measure_to_text(full, outdir / "parking_grid.txt")
        files.append("parking_grid.txt")
        norm = write_pgm(full.density(), outdir / "parking.pgm")
        files.append("parking.pgm")
        plan_to_csv(sol.walk_plan, outdir / "walk.csv")
        files.append("walk.csv")
        lines = ["i,k,j,mass"]
        for i, k, j, m in zip(
            sol.drive_rows, sol.drive_pivots, sol.drive_cols, sol.drive_masses
        ):
            lines.append(f"{i},{int(active[k])},{j},{m:.17g}")
        (outdir / "drive.csv").write_text("\n".join(lines) + "\n")
        files.append("drive.csv")
        summary = {
            **setup.meta,
            "command": "oracle",
            "oracle": "parking_via_reduction",
            "value": sol.total_cost,
            "alpha": sol.driving_fraction,
            "pgm_normalization": norm,
        }
    write_summary(outdir / "summary.txt", summary)
    files.append("summary.txt")
    write_manifest(outdir, files)
    return 0


def _run_analytic(setup, outdir) -> int:
    spec = setup.analytic
    alpha, region, c_star = parking_level_set(
        spec["p"], spec["lam"], spec["x0"], spec["cap"], spec["grid"]
    )
    files = []
    write_pgm(region.astype(float), outdir / "region.pgm")
    files.append("region.pgm")
    summary = {
        **setup.meta,
        "command": "analytic",
        "alpha": alpha,
        "c_star": c_star,
        "region_area": float(region.sum()) * spec["grid"].cell_area,
    }
    if spec["p"] == 2:
        try:
            summary["alpha_closed_form"] = alpha_closed_form_p2(
                spec["lam"], float(np.linalg.norm(spec["x0"]))
            )
        except ValueError:
            summary["alpha_closed_form"] = 1.0
    write_summary(outdir / "summary.txt", summary)
    files.append("summary.txt")
    write_manifest(outdir, files)
    return 0


def _read_pivot_weights(directory: Path):
    for name in ("pivot_grid.txt", "pivot.csv", "parking_grid.txt", "parking.csv"):
        path = directory / name
        if path.exists():
            if name.endswith(".txt"):
                from .serialize import grid_measure_from_text

                m = grid_measure_from_text(path)
                return m.weights, (m.grid.nx, m.grid.ny, m.grid.xmin, m.grid.xmax, m.grid.ymin, m.grid.ymax)
            from .serialize import measure_from_csv

            m = measure_from_csv(path)
            return m.weights, (m.n,)
    raise InputError(f"no pivot file found in {directory}")


def _run_compare(args) -> int:
    dir_a = Path(args.entropic)
    dir_b = Path(args.oracle)
    sum_a = read_summary(dir_a / "summary.txt")
    sum_b = read_summary(dir_b / "summary.txt")
    if sum_a.get("grid") != sum_b.get("grid"):
        raise InputError(
            f"grid mismatch: {sum_a.get('grid')} vs {sum_b.get('grid')}"
        )
    wa, ga = _read_pivot_weights(dir_a)
    wb, gb = _read_pivot_weights(dir_b)
    if ga != gb or len(wa) != len(wb):
        raise InputError("pivot supports do not match")
    value_a = float(sum_a.get("primal_value", sum_a.get("value")))
    value_b = float(sum_b.get("value", sum_b.get("primal_value")))
    gap = value_a - value_b
    tv = 0.5 * float(np.abs(wa - wb).sum())
    lines = [
        f"value_entropic = {value_a:.17g}",
        f"value_oracle = {value_b:.17g}",
        f"value_gap = {gap:.17g}",
        f"pivot_tv = {tv:.17g}",
    ]
    trace = sum_a.get("primal_trace", "")
    if trace:
        gaps = [float(v) - value_b for v in trace.split()]
        lines.append("gap_trace = " + " ".join(f"{v:.12g}" for v in gaps))
    ok = abs(gap) <= args.value_tol and tv <= args.tv_tol
    lines.append(f"value_tol = {args.value_tol:.17g}")
    lines.append(f"tv_tol = {args.tv_tol:.17g}")
    lines.append(f"passed = {ok}")
    text = "\n".join(lines)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.txt").write_text(text + "\n")
    return 0 if ok else 2


def _add_run_options(sub):
    sub.add_argument("--preset", help="named problem setup")
    sub.add_argument("--config", help="key = value config file")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--epsilon", type=float, help="final regularization")
    sub.add_argument("--grid", help="pivot grid as NXxNY")
    sub.add_argument("--max-iter", dest="max_iter", type=int)
    sub.add_argument("--marginal-tol", dest="marginal_tol", type=float)
    sub.add_argument("--seed", type=int, help="reserved; echoed into the summary")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="interpark",
        description="Constrained Wasserstein interpolation and parking-region solvers",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("interpolate", "park", "oracle", "analytic"):
        _add_run_options(subs.add_parser(name))
    comp = subs.add_parser("compare")
    comp.add_argument("--entropic", required=True, help="entropic run directory")
    comp.add_argument("--oracle", required=True, help="oracle run directory")
    comp.add_argument("--value-tol", dest="value_tol", type=float, default=0.05)
    comp.add_argument("--tv-tol", dest="tv_tol", type=float, default=0.05)
    comp.add_argument("--out", help="directory for compare.txt")
    subs.add_parser("presets")

    args = parser.parse_args(argv)
    try:
        if args.command == "presets":
            for name in preset_names():
                print(name)
            return 0
        if args.command == "compare":
            return _run_compare(args)
        opts = _merge_options(args)
        setup = _setup_from_options(opts, args.command)
        if "seed" in opts:
            setup.meta["seed"] = opts["seed"]
        outdir = _outdir(opts, args.command)
        if args.command == "interpolate":
            return _run_interpolate(setup, outdir)
        if args.command == "park":
            return _run_park(setup, outdir)
        if args.command == "oracle":
            return _run_oracle(setup, outdir)
        return _run_analytic(setup, outdir)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
