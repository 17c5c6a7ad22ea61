"""Solvers for constrained Wasserstein interpolation and optimal parking regions.

Exact desk-scale oracles (min-cost transport, 1D quantile formulas,
reduced-cost constructions, analytic level sets) back entropic
Sinkhorn-type solvers for the same problems on grids.
"""

from .costs import (
    CostSpec,
    ParkingCostResult,
    ReducedCostResult,
    coercivity_box,
    cost_matrix,
    eval_cost,
    parking_effective_cost,
    reduced_interpolation_cost,
)
from .diagnostics import (
    DiagnosticsReport,
    bang_bang_fraction,
    boundary_mass_fraction,
    duality_gap,
    interior_density_bound_check,
)
from .entropic import (
    DualPotentials,
    EntropicReport,
    SolverConfig,
    relative_entropy,
    sinkhorn_standard,
    stabilized_update,
)
from .exact_oracles import (
    ExactParkingSolution,
    TransportPlan,
    alpha_closed_form_p2,
    exact_ot,
    interpolation_via_reduction,
    parking_level_set,
    parking_via_reduction,
    quantile_ot_1d,
)
from .interpolation import (
    InterpolationProblem,
    InterpolationSolution,
    dual_objective_interpolation,
    pivot_from_duals,
    solve_interpolation,
)
from .measures import (
    Density,
    DensityBound,
    DiscreteMeasure,
    Free,
    GridSpec,
    Support,
    SupportMask,
    bound_from_constant,
    bound_from_function,
    box_mask,
    build_grid,
    dirac,
    full_mask,
    mask_from_predicate,
    measure_from_density,
    measure_from_points,
    normalize,
    sum_measures,
    total_mass,
)
from .parking import (
    ParkingEntropicSolution,
    ParkingProblem,
    dual_objective_parking,
    parking_objective,
    solve_parking,
    split_driving_walking,
)

__version__ = "0.1.0"
