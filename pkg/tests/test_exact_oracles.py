import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import interpark as ip
from interpark import CostSpec


def _uniform_line(lo, hi, n, grid_n=None):
    """1D uniform measure on [lo, hi] as 2D points on the y=0.5 line."""
    xs = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    pts = np.column_stack([xs, np.full(n, 0.5)])
    return ip.measure_from_points(pts, np.full(n, 1.0 / n))


class TestExactOT:
    def test_dirac_source_splits(self):
        C = np.array([[1.0, 3.0]])
        plan, value = ip.exact_ot(C, [1.0], [0.5, 0.5])
        assert value == pytest.approx(2.0)
        np.testing.assert_allclose(plan.to_dense(), [[0.5, 0.5]])

    def test_identity_on_zero_diagonal(self):
        C = 1.0 - np.eye(4)
        a = np.full(4, 0.25)
        plan, value = ip.exact_ot(C, a, a)
        assert value == 0.0
        np.testing.assert_allclose(plan.to_dense(), np.diag(a))

    def test_1d_translation_p1(self):
        mu0 = _uniform_line(0, 1, 200)
        mu1 = _uniform_line(5, 6, 200)
        C = ip.cost_matrix(CostSpec(1), mu0.points, mu1.points)
        _, value = ip.exact_ot(C, mu0.weights, mu1.weights)
        assert value == pytest.approx(5.0, abs=1e-12)

    def test_unbalanced_rejected(self):
        with pytest.raises(ValueError):
            ip.exact_ot(np.zeros((2, 2)), [0.5, 0.5], [0.6, 0.5])

    def test_nonfinite_cost_rejected(self):
        with pytest.raises(ValueError):
            ip.exact_ot(np.array([[np.inf]]), [1.0], [1.0])

    def test_plan_marginals_exact(self):
        rng = np.random.default_rng(11)
        C = rng.random((30, 40))
        a = rng.random(30)
        a /= a.sum()
        b = rng.random(40)
        b /= b.sum()
        plan, value = ip.exact_ot(C, a, b)
        np.testing.assert_allclose(plan.marginal0(), a, atol=1e-14)
        np.testing.assert_allclose(plan.marginal1(), b, atol=1e-14)
        # LP duality gap at the returned potentials
        assert abs(value - plan.dual_value(a, b)) <= 1e-9


class TestQuantile1D:
    def test_translation_p2(self):
        mu0 = _uniform_line(0, 1, 150)
        mu1 = _uniform_line(5, 6, 150)
        assert ip.quantile_ot_1d(mu0, mu1, 2.0) == pytest.approx(25.0)

    def test_translation_p1(self):
        mu0 = _uniform_line(0, 1, 150)
        mu1 = _uniform_line(5, 6, 150)
        assert ip.quantile_ot_1d(mu0, mu1, 1.0) == pytest.approx(5.0)

    def test_identical_measures(self):
        mu = _uniform_line(0, 1, 50)
        assert ip.quantile_ot_1d(mu, mu, 2.0) == 0.0

    def test_non_collinear_rejected(self):
        mu0 = ip.measure_from_points([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0]], [1 / 3] * 3)
        mu1 = ip.measure_from_points([[2.0, 2.0]], [1.0])
        with pytest.raises(ValueError):
            ip.quantile_ot_1d(mu0, mu1, 2.0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
    def test_matches_exact_ot_for_p_ge_1(self, seed, p):
        rng = np.random.default_rng(seed)
        n, m = rng.integers(2, 15), rng.integers(2, 15)
        x0 = np.sort(rng.random(n)) * 4
        x1 = np.sort(rng.random(m)) * 4 + rng.random() * 2
        w0 = rng.random(n) + 1e-3
        w0 /= w0.sum()
        w1 = rng.random(m) + 1e-3
        w1 /= w1.sum()
        mu0 = ip.measure_from_points(x0[:, None], w0)
        mu1 = ip.measure_from_points(x1[:, None], w1)
        q = ip.quantile_ot_1d(mu0, mu1, p)
        C = np.abs(x0[:, None] - x1[None, :]) ** p
        _, v = ip.exact_ot(C, w0, w1)
        assert q == pytest.approx(v, abs=1e-9)

    def test_concave_falls_back_to_exact(self):
        # for p < 1 mass prefers to stay in place, breaking monotonicity
        mu0 = ip.measure_from_points([[0.0], [1.0]], [0.5, 0.5])
        mu1 = ip.measure_from_points([[0.5], [1.0]], [0.5, 0.5])
        v = ip.quantile_ot_1d(mu0, mu1, 0.5)
        # optimal: keep the common atom at 1, move 0 -> 0.5
        assert v == pytest.approx(0.5 * 0.5**0.5)


class TestInterpolationReduction:
    def test_distance_threshold_t07(self, line_grid, line_measures, tv):
        mu0, mu1 = line_measures
        t = 0.7
        K = line_grid.centers()
        value, pivot = ip.interpolation_via_reduction(
            mu0, mu1, CostSpec(1, 1 - t), CostSpec(1, t), K
        )
        assert tv(pivot.weights, mu1.weights) <= 2 * line_grid.dx
        assert value == pytest.approx((1 - t) * 5.0, abs=1e-9)

    def test_quadratic_unconstrained_t03(self, line_grid, line_measures):
        mu0, mu1 = line_measures
        t = 0.3
        value, pivot = ip.interpolation_via_reduction(
            mu0, mu1, CostSpec(2, 1 - t), CostSpec(2, t), line_grid.centers()
        )
        x = line_grid.centers()[:, 0]
        inside = (x > 1.5 + 2 * line_grid.dx) & (x < 2.5 - 2 * line_grid.dx)
        dens = pivot.weights / line_grid.cell_area
        np.testing.assert_allclose(dens[inside], 1.0, atol=0.02)
        assert pivot.weights[(x < 1.5 - 2 * line_grid.dx) | (x > 2.5 + 2 * line_grid.dx)].sum() <= 1e-12

    def test_dirac_to_itself(self):
        K = np.array([[0.3, 0.3], [0.7, 0.7]])
        mu = ip.measure_from_points([[0.3, 0.3]], [1.0])
        value, pivot = ip.interpolation_via_reduction(mu, mu, CostSpec(2), CostSpec(2), K)
        assert value == 0.0
        np.testing.assert_allclose(pivot.weights, [1.0, 0.0])

    def test_value_equals_two_leg_recomputation(self):
        rng = np.random.default_rng(42)
        mu0 = ip.measure_from_points(rng.random((5, 2)), np.full(5, 0.2))
        w1 = rng.random(6)
        mu1 = ip.measure_from_points(rng.random((6, 2)) + 1.0, w1 / w1.sum())
        K = rng.random((50, 2)) * 2
        c0, c1 = CostSpec(2, 1), CostSpec(2, 1.7)
        value, pivot = ip.interpolation_via_reduction(mu0, mu1, c0, c1, K)
        _, v0 = ip.exact_ot(
            ip.cost_matrix(c0, mu0.points, K), mu0.weights, pivot.weights
        )
        _, v1 = ip.exact_ot(
            ip.cost_matrix(c1, K, mu1.points), pivot.weights, mu1.weights
        )
        assert value == pytest.approx(v0 + v1, abs=1e-9)

    def test_square_example_corner_atom(self):
        # Dirac at (-2,0), uniform ball at (3,0), diamond obstacle: the
        # projected pivot has an atom at the corner (1,0)
        pivot_grid = ip.build_grid(((-1, 1), (-1, 1)), 64, 64)
        mask = ip.mask_from_predicate(pivot_grid, lambda X, Y: np.abs(X) + np.abs(Y) <= 1 + 1e-12)
        ball_grid = ip.build_grid(((2, 4), (-1, 1)), 32, 32)
        mu1 = ip.measure_from_density(
            ball_grid, lambda X, Y: ((X - 3) ** 2 + Y**2 <= 1).astype(float), True
        )
        mu0 = ip.measure_from_points([[-2.0, 0.0]], [1.0])
        cells = pivot_grid.centers()[mask.flat_indices()]
        value, pivot = ip.interpolation_via_reduction(
            mu0, mu1, CostSpec(2, 1), CostSpec(2, 2), cells
        )
        near_corner = np.abs(pivot.points - np.array([1.0, 0.0])).max(axis=1) <= 1.5 * pivot_grid.dx
        assert pivot.weights[near_corner].sum() > 0.05


class TestParkingReduction:
    def test_metric_case_nobody_drives(self):
        rng = np.random.default_rng(6)
        nu0 = ip.measure_from_points(rng.random((4, 2)), np.full(4, 0.25))
        nu1 = ip.measure_from_points(rng.random((4, 2)) + 0.5, np.full(4, 0.25))
        K = rng.random((30, 2))
        sol = ip.parking_via_reduction(nu0, nu1, CostSpec(1, 1), CostSpec(1, 1), K)
        assert sol.driving_fraction == 0.0
        assert sol.parking_measure.total_mass() == 0.0
        _, walk_value = ip.exact_ot(
            ip.cost_matrix(CostSpec(1), nu0.points, nu1.points), nu0.weights, nu1.weights
        )
        assert sol.total_cost == pytest.approx(walk_value, abs=1e-12)

    def test_dirac_pair_p2_drives_to_third_point(self):
        xs = np.linspace(-0.5, 1.5, 401)
        K = np.column_stack([np.repeat(xs, 41), np.tile(np.linspace(-0.1, 0.1, 41), 401)])
        nu0 = ip.measure_from_points([[1.0, 0.0]], [1.0])
        nu1 = ip.measure_from_points([[0.0, 0.0]], [1.0])
        sol = ip.parking_via_reduction(nu0, nu1, CostSpec(2, 1), CostSpec(2, 2), K)
        assert sol.driving_fraction == pytest.approx(1.0)
        peak = sol.parking_measure.points[np.argmax(sol.parking_measure.weights)]
        np.testing.assert_allclose(peak, [1 / 3, 0.0], atol=5e-3)

    def test_equal_marginals_zero_cost(self):
        nu = ip.measure_from_points([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.5])
        sol = ip.parking_via_reduction(nu, nu, CostSpec(2, 1), CostSpec(2, 2), [[0.5, 0.5]])
        assert sol.driving_fraction == 0.0
        assert sol.total_cost == 0.0

    def test_marginal_decomposition(self):
        rng = np.random.default_rng(7)
        nu0 = ip.measure_from_points(rng.random((5, 2)) * 0.3, np.full(5, 0.2))
        nu1 = ip.measure_from_points(rng.random((5, 2)) * 0.3 + 0.7, np.full(5, 0.2))
        K = rng.random((60, 2))
        sol = ip.parking_via_reduction(nu0, nu1, CostSpec(2, 1), CostSpec(2, 3), K)
        m0 = sol.walk_plan.marginal0() + sol.drive_marginal0(5)
        m1 = sol.walk_plan.marginal1() + sol.drive_marginal1(5)
        np.testing.assert_allclose(m0, nu0.weights, atol=1e-12)
        np.testing.assert_allclose(m1, nu1.weights, atol=1e-12)
        assert sol.parking_measure.total_mass() == pytest.approx(sol.driving_fraction)

    def test_parking_never_hurts(self):
        rng = np.random.default_rng(8)
        nu0 = ip.measure_from_points(rng.random((6, 2)), np.full(6, 1 / 6))
        nu1 = ip.measure_from_points(rng.random((6, 2)), np.full(6, 1 / 6))
        K = rng.random((40, 2))
        c1 = CostSpec(2, 2)
        sol = ip.parking_via_reduction(nu0, nu1, CostSpec(2, 1), c1, K)
        _, walk_value = ip.exact_ot(
            ip.cost_matrix(c1, nu0.points, nu1.points), nu0.weights, nu1.weights
        )
        assert sol.total_cost <= walk_value + 1e-12


class TestParkingLevelSet:
    @pytest.mark.parametrize(
        "p,lam,x0n,expect",
        [
            (2.0, 2.0, 0.5, 0.3491),
            (2.0, 2.0, 1.0, 1.0),
            (1.0, 2.0, 1.0, 0.9663),
            (1.0, 2.0, 0.5, 0.2415),
        ],
    )
    def test_figure_alphas(self, p, lam, x0n, expect):
        grid = ip.build_grid(((-1.6, 1.6), (-1.6, 1.6)), 800, 800)
        alpha, region, c_star = ip.parking_level_set(p, lam, (x0n, 0.0), 1.0, grid)
        assert alpha == pytest.approx(expect, abs=0.005)
        if alpha < 1.0:
            assert c_star == 0.0
            assert region.sum() * grid.cell_area == pytest.approx(alpha, abs=1e-12)
        else:
            assert c_star < 0.0
            assert region.sum() * grid.cell_area == pytest.approx(1.0, abs=1e-4)

    def test_ball_geometry_p2(self):
        # region is the ball centered at x0/(1+lam) with radius lam|x0|/(1+lam)
        grid = ip.build_grid(((-1.0, 1.0), (-1.0, 1.0)), 500, 500)
        _, region, _ = ip.parking_level_set(2.0, 2.0, (0.5, 0.0), 1.0, grid)
        X, Y = grid.meshgrid()
        ball = (X - 0.5 / 3) ** 2 + Y**2 <= (2 * 0.5 / 3) ** 2
        mismatch = (region ^ ball).sum() * grid.cell_area
        assert mismatch <= 0.01

    def test_region_touching_grid_boundary_rejected(self):
        grid = ip.build_grid(((-0.2, 0.2), (-0.2, 0.2)), 100, 100)
        with pytest.raises(ValueError):
            ip.parking_level_set(2.0, 2.0, (0.5, 0.0), 1.0, grid)

    def test_zero_x0_rejected(self):
        grid = ip.build_grid(((-1, 1), (-1, 1)), 50, 50)
        with pytest.raises(ValueError):
            ip.parking_level_set(2.0, 2.0, (0.0, 0.0), 1.0, grid)


class TestClosedFormAlpha:
    def test_reference_value(self):
        assert ip.alpha_closed_form_p2(2.0, 0.5) == pytest.approx(np.pi / 9, abs=1e-12)

    def test_vanishes_at_origin(self):
        assert ip.alpha_closed_form_p2(2.0, 1e-9) == pytest.approx(0.0, abs=1e-12)

    def test_above_threshold_rejected(self):
        with pytest.raises(ValueError):
            ip.alpha_closed_form_p2(2.0, 0.9)

    def test_agrees_with_quadrature(self):
        val = ip.alpha_closed_form_p2(2.0, 0.8)
        assert val == pytest.approx(np.pi * 0.64 * 4 / 9, abs=1e-12)
        grid = ip.build_grid(((-1.2, 2.0), (-1.6, 1.6)), 900, 900)
        alpha, _, _ = ip.parking_level_set(2.0, 2.0, (0.8, 0.0), 1.0, grid)
        assert alpha == pytest.approx(val, abs=1e-3)
