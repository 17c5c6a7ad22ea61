import numpy as np
import pytest

import interpark as ip


def _grid(n=10):
    return ip.build_grid(((0, 1), (0, 1)), n, n)


def _grid_measure(grid, weights):
    return ip.DiscreteMeasure(grid.centers(), np.asarray(weights, dtype=float), grid)


class TestBangBang:
    def test_exact_bang_bang_scores_zero(self):
        g = _grid()
        cap = np.full(g.n_cells, 2.0)
        w = np.zeros(g.n_cells)
        w[:25] = 2.0 * g.cell_area  # saturated on a quarter, zero elsewhere
        assert ip.bang_bang_fraction(_grid_measure(g, w), cap) == 0.0

    def test_half_cap_everywhere_scores_one(self):
        g = _grid()
        cap = np.full(g.n_cells, 2.0)
        w = np.full(g.n_cells, 1.0 * g.cell_area)
        assert ip.bang_bang_fraction(_grid_measure(g, w), cap) == 1.0

    def test_zero_pivot_scores_zero_by_convention(self):
        g = _grid()
        cap = np.full(g.n_cells, 1.0)
        assert ip.bang_bang_fraction(_grid_measure(g, np.zeros(g.n_cells)), cap) == 0.0

    def test_widening_band_decreases_fraction(self):
        g = _grid()
        rng = np.random.default_rng(0)
        cap = np.full(g.n_cells, 2.0)
        w = rng.random(g.n_cells) * 2.0 * g.cell_area
        m = _grid_measure(g, w)
        narrow = ip.bang_bang_fraction(m, cap, band=(0.2, 0.8))
        wide = ip.bang_bang_fraction(m, cap, band=(0.05, 0.95))
        assert narrow <= wide

    def test_mass_on_zero_cap_rejected(self):
        g = _grid()
        cap = np.zeros(g.n_cells)
        w = np.full(g.n_cells, g.cell_area)
        with pytest.raises(ValueError):
            ip.bang_bang_fraction(_grid_measure(g, w), cap)

    def test_deterministic(self):
        g = _grid()
        rng = np.random.default_rng(1)
        cap = np.full(g.n_cells, 1.0)
        w = rng.random(g.n_cells) * g.cell_area
        m = _grid_measure(g, w)
        assert ip.bang_bang_fraction(m, cap) == ip.bang_bang_fraction(m, cap)


class TestBoundaryMass:
    def test_all_mass_on_band_scores_one(self):
        g = _grid()
        mask = ip.full_mask(g)
        w = np.where(mask.boundary_band.ravel(), 1.0, 0.0)
        assert ip.boundary_mass_fraction(_grid_measure(g, w), mask) == 1.0

    def test_uniform_on_solid_block(self):
        g = _grid(10)
        mask = ip.full_mask(g)
        w = np.full(g.n_cells, 0.01)
        assert ip.boundary_mass_fraction(_grid_measure(g, w), mask) == pytest.approx(0.36)

    def test_zero_pivot_rejected(self):
        g = _grid()
        mask = ip.full_mask(g)
        with pytest.raises(ValueError):
            ip.boundary_mass_fraction(_grid_measure(g, np.zeros(g.n_cells)), mask)

    def test_grid_mismatch_rejected(self):
        g = _grid(10)
        other = _grid(12)
        mask = ip.full_mask(other)
        w = np.full(g.n_cells, 0.01)
        with pytest.raises(ValueError):
            ip.boundary_mass_fraction(_grid_measure(g, w), mask)


class TestDualityGap:
    def test_weak_duality_zero_duals(self):
        assert ip.duality_gap(5.0, 0.0) == 5.0

    def test_lp_gap_tiny(self):
        rng = np.random.default_rng(2)
        C = rng.random((20, 25))
        a = rng.random(20)
        a /= a.sum()
        b = rng.random(25)
        b /= b.sum()
        plan, value = ip.exact_ot(C, a, b)
        assert abs(ip.duality_gap(value, plan.dual_value(a, b))) <= 1e-9

    def test_negative_gap_raises(self):
        with pytest.raises(ValueError):
            ip.duality_gap(1.0, 1.0 + 1e-6)

    def test_tiny_negative_gap_tolerated(self):
        assert ip.duality_gap(1.0, 1.0 + 1e-10) == pytest.approx(-1e-10)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ip.duality_gap(np.inf, 0.0)


class TestInteriorDensityBound:
    def test_contraction_of_uniform_respects_bound(self):
        # midpoint map contracts by 1/2 per axis: density x4 = the bound
        g = _grid(40)
        mask = ip.full_mask(g)
        X, Y = g.meshgrid()
        inside = (np.abs(X - 0.5) <= 0.25) & (np.abs(Y - 0.5) <= 0.25)
        w = np.where(inside.ravel(), 4.0 * g.cell_area, 0.0)
        pivot = _grid_measure(g, w)
        mu0_grid = _grid(20)
        mu0 = ip.measure_from_density(mu0_grid, lambda X, Y: np.ones_like(X), True)
        ratio = ip.interior_density_bound_check(
            pivot, mu0, ip.CostSpec(2, 1), ip.CostSpec(2, 1), mask
        )
        assert ratio == pytest.approx(1.0, abs=1e-9)

    def test_zero_interior_pivot(self):
        g = _grid(12)
        mask = ip.full_mask(g)
        w = np.where(mask.boundary_band.ravel(), 1.0, 0.0)
        mu0 = ip.measure_from_density(_grid(6), lambda X, Y: np.ones_like(X), True)
        ratio = ip.interior_density_bound_check(
            _grid_measure(g, w), mu0, ip.CostSpec(2), ip.CostSpec(2), mask
        )
        assert ratio == 0.0

    def test_non_quadratic_rejected(self):
        g = _grid(8)
        mask = ip.full_mask(g)
        w = np.full(g.n_cells, g.cell_area)
        mu0 = ip.measure_from_density(_grid(4), lambda X, Y: np.ones_like(X), True)
        with pytest.raises(ValueError):
            ip.interior_density_bound_check(
                _grid_measure(g, w), mu0, ip.CostSpec(1), ip.CostSpec(2), mask
            )

    def test_scale_asymmetry_raises_bound(self):
        g = _grid(30)
        mask = ip.full_mask(g)
        w = np.full(g.n_cells, g.cell_area)  # uniform density 1
        mu0 = ip.measure_from_density(_grid(10), lambda X, Y: np.ones_like(X), True)
        r_sym = ip.interior_density_bound_check(
            _grid_measure(g, w), mu0, ip.CostSpec(2, 1), ip.CostSpec(2, 1), mask
        )
        r_asym = ip.interior_density_bound_check(
            _grid_measure(g, w), mu0, ip.CostSpec(2, 1), ip.CostSpec(2, 2), mask
        )
        assert r_asym == pytest.approx(r_sym / 4)  # bound grows by (2/1)^2


class TestReport:
    def test_as_dict_round_trip(self):
        rep = ip.DiagnosticsReport(bang_bang=0.1, duality_gap=1e-8)
        d = rep.as_dict()
        assert d["bang_bang"] == 0.1
        assert d["boundary_mass"] is None
