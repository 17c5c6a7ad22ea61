#!/usr/bin/env python3
"""Compare entropic parking runs against the analytic level-set solution.

Reproduces the two-Dirac parking examples (driver at x0, service at the
origin, unit density cap): for each (p, lam, |x0|) case the driving
fraction from the entropic solver is printed next to the level-set
quadrature value and, for p=2 below the full-driving threshold, the
closed form pi*|x0|^2*lam^2/(lam+1)^2.
"""

import argparse

import numpy as np

import interpark as ip

CASES = [
    ("p=2 lam=2 |x0|=1.0", 2.0, 2.0, 1.0),
    ("p=2 lam=2 |x0|=0.5", 2.0, 2.0, 0.5),
    ("p=1 lam=2 |x0|=1.0", 1.0, 2.0, 1.0),
    ("p=1 lam=2 |x0|=0.5", 1.0, 2.0, 0.5),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, default=200, help="entropic parking grid size")
    ap.add_argument("--epsilon", type=float, default=5e-4)
    ap.add_argument("--quad", type=int, default=900, help="level-set quadrature size")
    args = ap.parse_args()

    quad_grid = ip.build_grid(((-1.6, 1.6), (-1.6, 1.6)), args.quad, args.quad)
    park_grid = ip.build_grid(((-1.1, 1.4), (-1.25, 1.25)), args.grid, args.grid)
    bound = ip.Density(ip.bound_from_constant(park_grid, 1.0))

    print(f"{'case':22s} {'entropic':>9s} {'level set':>10s} {'closed form':>12s}")
    for label, p, lam, x0n in CASES:
        nu0 = ip.measure_from_points([[x0n, 0.0]], [1.0])
        nu1 = ip.measure_from_points([[0.0, 0.0]], [1.0])
        cfg = ip.SolverConfig(epsilon=args.epsilon, marginal_tol=1e-8, max_iter=10000)
        sol = ip.solve_parking(
            ip.ParkingProblem(nu0, nu1, ip.CostSpec(p, 1.0), ip.CostSpec(p, lam), park_grid, bound, cfg)
        )
        alpha_q, _, _ = ip.parking_level_set(p, lam, (x0n, 0.0), 1.0, quad_grid)
        if p != 2:
            closed = f"{'-':>12s}"
        elif x0n < (lam + 1) / (lam * np.sqrt(np.pi)):
            closed = f"{ip.alpha_closed_form_p2(lam, x0n):12.5f}"
        else:
            closed = f"{'(alpha=1)':>12s}"
        print(f"{label:22s} {sol.alpha:9.5f} {alpha_q:10.5f} {closed}")


if __name__ == "__main__":
    main()
