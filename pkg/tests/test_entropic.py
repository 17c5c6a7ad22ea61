import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import interpark as ip
from interpark import SolverConfig
from interpark.entropic import log_masses, lse, one_mode_extrapolation


class TestRelativeEntropy:
    def test_equal_probabilities_give_minus_one(self):
        p = np.array([0.25, 0.25, 0.5])
        assert ip.relative_entropy(p, p) == pytest.approx(-1.0)

    def test_point_mass_vs_uniform(self):
        assert ip.relative_entropy([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2) - 1)

    def test_undominated_gives_infinity(self):
        assert ip.relative_entropy([1.0, 0.0], [0.0, 1.0]) == math.inf

    def test_zero_entries_ignored(self):
        assert ip.relative_entropy([0.0, 1.0], [0.0, 1.0]) == pytest.approx(-1.0)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=10),
        st.lists(st.floats(1e-6, 1.0), min_size=2, max_size=10),
    )
    def test_gibbs_bound_for_probabilities(self, pw, qw):
        n = min(len(pw), len(qw))
        p = np.array(pw[:n])
        p /= p.sum()
        q = np.array(qw[:n])
        q /= q.sum()
        # H(P|Q) = KL(P|Q) - 1 >= -1 for probability pairs
        assert ip.relative_entropy(p, q) >= -1.0 - 1e-12


class TestStabilizedUpdate:
    def test_single_term(self):
        assert ip.stabilized_update([math.log(3.0)], [0.0]) == pytest.approx(math.log(3.0))

    def test_two_equal_terms(self):
        la = math.log(3.0)
        assert ip.stabilized_update([la, la], [0.0, 0.0]) == pytest.approx(math.log(6.0))

    def test_all_neg_inf(self):
        assert ip.stabilized_update([-np.inf, -np.inf], [0.0, 0.0]) == -np.inf

    def test_huge_magnitudes_no_overflow(self):
        out = ip.stabilized_update([5000.0, 5000.0], [-1000.0, -1000.0])
        assert out == pytest.approx(4000.0 + math.log(2.0))

    def test_lse_axis_handles_neg_inf_rows(self):
        a = np.array([[-np.inf, -np.inf], [0.0, math.log(2)]])
        out = lse(a, axis=1)
        assert out[0] == -np.inf
        assert out[1] == pytest.approx(math.log(3))

    def test_log_masses(self):
        lm = log_masses([0.0, 2.0])
        assert lm[0] == -np.inf and lm[1] == pytest.approx(math.log(2))


class TestSolverConfig:
    def test_default_schedule_halves_to_target(self):
        sched = SolverConfig(epsilon=5e-4).resolved_schedule()
        assert sched[0] == pytest.approx(0.1)
        assert sched[-1] == 5e-4
        assert all(b < a for a, b in zip(sched, sched[1:]))

    def test_explicit_schedule_must_end_at_epsilon(self):
        with pytest.raises(ValueError):
            SolverConfig(epsilon=1e-3, epsilon_schedule=(1e-2, 5e-3))

    def test_schedule_must_decrease(self):
        with pytest.raises(ValueError):
            SolverConfig(epsilon=1e-3, epsilon_schedule=(1e-3, 1e-2, 1e-3))

    def test_large_epsilon_runs_single_stage(self):
        assert SolverConfig(epsilon=0.5).resolved_schedule() == (0.5,)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            SolverConfig(epsilon=0.0)
        with pytest.raises(ValueError):
            SolverConfig(max_iter=0)


class TestSinkhornStandard:
    def test_dirac_pair_forced_plan(self):
        C = np.array([[2.5]])
        rep = ip.sinkhorn_standard(C, [1.0], [1.0], SolverConfig(epsilon=1e-2))
        assert rep.converged
        assert rep.primal_cost == pytest.approx(2.5)
        np.testing.assert_allclose(rep.plan, [[1.0]], atol=1e-12)

    def test_zero_cost_gives_product_plan(self):
        n = 6
        a = np.full(n, 1 / n)
        rep = ip.sinkhorn_standard(np.zeros((n, n)), a, a, SolverConfig(epsilon=1e-2))
        assert rep.primal_cost == 0.0
        np.testing.assert_allclose(rep.plan, np.outer(a, a), atol=1e-12)

    def test_1d_uniform_translation_small_bias(self):
        n = 200
        x0 = (np.arange(n) + 0.5) / n
        x1 = 5 + (np.arange(n) + 0.5) / n
        C = (x0[:, None] - x1[None, :]) ** 2
        a = np.full(n, 1 / n)
        rep = ip.sinkhorn_standard(C, a, a, SolverConfig(epsilon=5e-4, marginal_tol=1e-8))
        assert rep.converged
        assert 25.0 <= rep.primal_cost <= 25.2

    def test_entropic_cost_dominates_exact(self):
        rng = np.random.default_rng(9)
        C = rng.random((12, 12))
        a = rng.random(12)
        a /= a.sum()
        b = rng.random(12)
        b /= b.sum()
        rep = ip.sinkhorn_standard(C, a, b, SolverConfig(epsilon=1e-3, marginal_tol=1e-9))
        _, exact = ip.exact_ot(C, a, b)
        assert rep.primal_cost >= exact - 1e-9

    def test_primal_trace_nonincreasing(self):
        rng = np.random.default_rng(10)
        C = rng.random((15, 15))
        a = rng.random(15)
        a /= a.sum()
        b = rng.random(15)
        b /= b.sum()
        rep = ip.sinkhorn_standard(C, a, b, SolverConfig(epsilon=1e-3, marginal_tol=1e-9))
        trace = rep.primal_trace
        assert all(t2 <= t1 + 1e-9 for t1, t2 in zip(trace, trace[1:]))

    def test_zero_mass_rows_allowed(self):
        C = np.array([[0.0, 1.0], [1.0, 0.0]])
        rep = ip.sinkhorn_standard(C, [1.0, 0.0], [1.0, 0.0], SolverConfig(epsilon=1e-2))
        assert rep.converged
        assert rep.primal_cost == pytest.approx(0.0, abs=1e-12)

    def test_nonconvergence_reported_not_raised(self):
        C = np.array([[0.0, 1.0], [1.0, 0.0]])
        cfg = SolverConfig(epsilon=1e-4, max_iter=1, marginal_tol=1e-16, check_every=1, accel_lag=0)
        rep = ip.sinkhorn_standard(C, [0.3, 0.7], [0.6, 0.4], cfg)
        assert not rep.converged


class TestExtrapolation:
    def test_exact_on_pure_geometric_sequence(self):
        limit = np.array([1.0, -2.0, 3.0])
        d = np.array([0.5, 0.25, -0.3])
        xs = [limit + d * 0.8**k for k in range(3)]
        out = one_mode_extrapolation(*xs)
        np.testing.assert_allclose(out, limit, atol=1e-12)

    def test_rejects_nonconverging(self):
        x = np.zeros(3)
        assert one_mode_extrapolation(x, x + 1, x + 3) is None

    def test_rejects_stationary(self):
        x = np.ones(4)
        assert one_mode_extrapolation(x, x, x) is None
