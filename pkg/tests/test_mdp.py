import numpy as np
import pytest

from polopt.nodes.environment_operators import random_tabular
from polopt.nodes.errors import StationaryDistributionError
from polopt.nodes.geometry import build_regularizer
from polopt.nodes.geometry_operators import EntropyGeometry, NullRegularizer
from polopt.nodes.mdp import MdpModule
from polopt.nodes.mdp_operators import (
    PolicyTable,
    TabularMdp,
    advantage,
    advantage_table,
    bellman_residual,
    evaluate_exact,
    objective_f,
    performance_difference,
    policy_iteration_step,
    solve_oracle,
    stationarity_residual,
    stationary_distribution,
    value_iteration,
    visitation,
)

from .conftest import random_policy_rows


class TestTabularMdp:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            TabularMdp.from_tensor(np.full((2, 1, 2), 0.4), np.zeros((2, 1)), 0.9)

    def test_gamma_range(self):
        with pytest.raises(ValueError):
            TabularMdp.from_tensor(np.full((2, 1, 2), 0.5), np.zeros((2, 1)), 1.0)

    def test_negative_cost(self):
        with pytest.raises(ValueError):
            TabularMdp.from_tensor(np.full((2, 1, 2), 0.5), -np.ones((2, 1)), 0.5)

    def test_json_preserves_sparse_kernel(self, tmp_path):
        import scipy.sparse as sp

        kernel = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]))
        mdp = TabularMdp(kernel, np.array([[1.0, 0.5], [0.2, 0.0]]), 0.8, meta={"kind": "toy"})
        path = tmp_path / "toy.json"
        mdp.to_json(path)
        loaded = TabularMdp.from_json(path)
        assert loaded.is_sparse
        np.testing.assert_allclose(loaded.transition, mdp.transition)
        assert loaded.meta == {"kind": "toy"}

    def test_policy_rows_validated(self):
        with pytest.raises(ValueError):
            PolicyTable(np.array([[0.7, 0.7]]))


class TestEvaluation:
    def test_zero_cost(self, null_reg):
        mdp = random_tabular(4, 2, 0.9, seed=1)
        mdp = TabularMdp(mdp.kernel, np.zeros((4, 2)), 0.9)
        vals = evaluate_exact(mdp, PolicyTable.uniform(4, 2), null_reg)
        np.testing.assert_allclose(vals.V, 0.0)
        np.testing.assert_allclose(vals.Q, 0.0)

    def test_single_state_geometric_series(self, null_reg):
        mdp = TabularMdp.from_tensor(np.ones((1, 1, 1)), np.array([[0.7]]), 0.95)
        vals = evaluate_exact(mdp, PolicyTable.uniform(1, 1), null_reg)
        np.testing.assert_allclose(vals.V, [0.7 / 0.05])

    def test_bellman_equation(self, small_mdp, null_reg, rng):
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        vals = evaluate_exact(small_mdp, pi, null_reg)
        P = small_mdp.policy_kernel(pi.rows)
        c_pi = np.sum(pi.rows * small_mdp.cost, axis=1)
        np.testing.assert_allclose(vals.V, c_pi + 0.9 * P @ vals.V, atol=1e-12)
        np.testing.assert_allclose(np.sum(vals.Q * pi.rows, axis=1), vals.V, atol=1e-12)

    def test_monte_carlo_agreement(self, null_reg):
        mdp = random_tabular(3, 2, 0.9, seed=11)
        pi = PolicyTable.uniform(3, 2)
        vals = evaluate_exact(mdp, pi, null_reg)
        rng = np.random.default_rng(0)
        n_rollouts, horizon = 4000, 200
        P = mdp.policy_kernel(pi.rows)
        c_pi = np.sum(pi.rows * mdp.cost, axis=1)
        states = np.zeros(n_rollouts, dtype=int)
        totals = np.zeros(n_rollouts)
        for t in range(horizon):
            totals += 0.9 ** t * c_pi[states]
            u = rng.random(n_rollouts)
            states = np.minimum((np.cumsum(P[states], axis=1) < u[:, None]).sum(axis=1), 2)
        se = totals.std(ddof=1) / np.sqrt(n_rollouts)
        assert abs(totals.mean() - vals.V[0]) <= 4 * se + 0.9 ** horizon * 10


class TestAdvantage:
    def test_zero_at_current_policy(self, small_mdp, rng):
        reg = build_regularizer({"kind": "kl_to_anchor", "weight": 0.3}, 3)
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        vals = evaluate_exact(small_mdp, pi, reg)
        for s in range(6):
            assert advantage(vals, reg, pi, s, pi(s)) == 0.0

    def test_null_regularizer_is_linear(self, small_mdp, null_reg, rng):
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        vals = evaluate_exact(small_mdp, pi, null_reg)
        a = rng.dirichlet(np.ones(3))
        np.testing.assert_allclose(advantage(vals, null_reg, pi, 2, a), vals.Q[2] @ (a - pi(2)))

    def test_optimal_policy_has_no_descent_direction(self, small_mdp, null_reg):
        oracle = solve_oracle(small_mdp, null_reg)
        for i in range(3):
            vertex = PolicyTable.from_actions(np.full(6, i), 3)
            psi = advantage_table(oracle.vals, null_reg, oracle.policy, vertex)
            assert np.all(psi >= -1e-9)


class TestVisitation:
    def test_zero_discount(self, null_reg):
        mdp = random_tabular(4, 2, 0.0, seed=3)
        kappa = visitation(mdp, PolicyTable.uniform(4, 2), 1).kappa
        np.testing.assert_allclose(kappa, np.eye(4)[1], atol=1e-15)

    def test_absorbing_start(self):
        transition = np.array([[[1.0, 0.0]], [[0.5, 0.5]]])
        mdp = TabularMdp.from_tensor(transition, np.zeros((2, 1)), 0.9)
        kappa = visitation(mdp, PolicyTable.uniform(2, 1), 0).kappa
        np.testing.assert_allclose(kappa, [1.0, 0.0], atol=1e-15)

    def test_matches_truncated_series(self, small_mdp, rng):
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        P = small_mdp.policy_kernel(pi.rows)
        e = np.eye(6)[0]
        series = np.zeros(6)
        for t in range(201):
            series += 0.1 * 0.9 ** t * e
            e = P.T @ e
        kappa = visitation(small_mdp, pi, 0).kappa
        np.testing.assert_allclose(kappa, series, atol=1e-8)
        np.testing.assert_allclose(kappa.sum(), 1.0, atol=1e-12)

    def test_start_mass_lower_bound(self, small_mdp, rng):
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        for s in range(6):
            assert visitation(small_mdp, pi, s).kappa[s] >= 0.1 - 1e-12


class TestPerformanceDifference:
    def test_same_policy(self, small_mdp, null_reg):
        pi = PolicyTable.uniform(6, 3)
        assert abs(performance_difference(small_mdp, pi, pi, null_reg, 0)) <= 1e-12

    @pytest.mark.parametrize("gamma", [0.5, 0.9, 0.99])
    def test_identity_on_random_mdps(self, rng, gamma):
        reg = build_regularizer({"kind": "kl_to_anchor", "weight": 0.2}, 3)
        for seed in range(5):
            mdp = random_tabular(8, 3, gamma, seed=seed)
            pi = PolicyTable(random_policy_rows(rng, 8, 3))
            pi_prime = PolicyTable(random_policy_rows(rng, 8, 3))
            direct = evaluate_exact(mdp, pi_prime, reg).V - evaluate_exact(mdp, pi, reg).V
            for s in range(8):
                np.testing.assert_allclose(
                    performance_difference(mdp, pi, pi_prime, reg, s), direct[s], atol=1e-9 / (1 - gamma)
                )

    def test_monotonicity_identity_under_nu_star(self, small_mdp, null_reg, rng):
        oracle = solve_oracle(small_mdp, null_reg)
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        vals = evaluate_exact(small_mdp, pi, null_reg)
        psi = advantage_table(vals, null_reg, pi, oracle.policy)
        lhs = -oracle.nu @ psi
        rhs = 0.1 * oracle.nu @ (vals.V - oracle.V)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestStationaryDistribution:
    def test_fixed_point(self, small_mdp, rng):
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        nu = stationary_distribution(small_mdp, pi)
        P = small_mdp.policy_kernel(pi.rows)
        np.testing.assert_allclose(nu @ P, nu, atol=1e-11)
        np.testing.assert_allclose(nu.sum(), 1.0)

    def test_periodic_chain(self):
        mdp = TabularMdp.from_tensor(np.array([[[0.0, 1.0]], [[1.0, 0.0]]]), np.zeros((2, 1)), 0.5)
        nu = stationary_distribution(mdp, PolicyTable.uniform(2, 1), plain_budget=50)
        np.testing.assert_allclose(nu, [0.5, 0.5], atol=1e-12)

    def test_budget_exhausted(self):
        mdp = TabularMdp.from_tensor(np.array([[[0.0, 1.0]], [[1.0, 0.0]]]), np.zeros((2, 1)), 0.5)
        start = PolicyTable.uniform(2, 1)
        with pytest.raises(StationaryDistributionError):
            stationary_distribution(mdp, start, tol=0.0, max_iter=10, plain_budget=5)


class TestOracles:
    def test_objective_with_point_mass(self, small_mdp, null_reg):
        pi = PolicyTable.uniform(6, 3)
        vals = evaluate_exact(small_mdp, pi, null_reg)
        assert objective_f(small_mdp, pi, null_reg, np.eye(6)[4]) == pytest.approx(vals.V[4])

    def test_zero_cost_objective(self, null_reg):
        mdp = random_tabular(3, 2, 0.9, seed=4)
        mdp = TabularMdp(mdp.kernel, np.zeros((3, 2)), 0.9)
        assert objective_f(mdp, PolicyTable.uniform(3, 2), null_reg, np.full(3, 1 / 3)) == 0.0

    def test_value_iteration_residual(self, small_mdp, null_reg):
        V, policy = value_iteration(small_mdp, null_reg, tol=1e-10)
        assert bellman_residual(small_mdp, null_reg, V) <= 1e-9
        np.testing.assert_allclose(policy.rows.sum(axis=1), 1.0)

    def test_regularized_value_iteration(self, small_mdp):
        reg = build_regularizer({"kind": "kl_to_anchor", "weight": 0.5}, 3)
        geom = EntropyGeometry({"action_dim": 3})
        V, policy = value_iteration(small_mdp, reg, tol=1e-11, geom=geom)
        assert bellman_residual(small_mdp, reg, V, geom) <= 1e-8
        assert np.all(policy.rows > 0)

    def test_policy_iteration_fixed_point(self, small_mdp, null_reg):
        oracle = solve_oracle(small_mdp, null_reg)
        nxt = policy_iteration_step(small_mdp, oracle.policy, null_reg)
        f_next = objective_f(small_mdp, nxt, null_reg, oracle.nu)
        np.testing.assert_allclose(f_next, oracle.f_star, atol=1e-9)

    def test_policy_iteration_contraction(self, null_reg, rng):
        for seed in range(50):
            gamma = float(rng.uniform(0.5, 0.95))
            mdp = random_tabular(int(rng.integers(2, 10)), int(rng.integers(2, 5)), gamma, seed=seed)
            oracle = solve_oracle(mdp, null_reg)
            pi = PolicyTable(random_policy_rows(rng, mdp.n_states, mdp.n_actions))
            gap = objective_f(mdp, pi, null_reg, oracle.nu) - oracle.f_star
            nxt = policy_iteration_step(mdp, pi, null_reg)
            gap_next = objective_f(mdp, nxt, null_reg, oracle.nu) - oracle.f_star
            assert gap_next <= gamma * gap + 1e-9

    def test_single_state_one_step(self, null_reg):
        mdp = TabularMdp.from_tensor(np.ones((1, 3, 1)), np.array([[0.3, 0.1, 0.2]]), 0.9)
        nxt = policy_iteration_step(mdp, PolicyTable.uniform(1, 3), null_reg)
        np.testing.assert_array_equal(nxt.rows, [[0.0, 1.0, 0.0]])

    def test_greedy_ties_pick_lowest_index(self, null_reg):
        mdp = TabularMdp.from_tensor(np.ones((1, 3, 1)), np.array([[0.2, 0.1, 0.1]]), 0.5)
        nxt = policy_iteration_step(mdp, PolicyTable.uniform(1, 3), null_reg)
        np.testing.assert_array_equal(nxt.rows, [[0.0, 1.0, 0.0]])


class TestStationarityResidual:
    def test_policy_iteration_step_has_nonnegative_residuals(self, small_mdp, null_reg, rng):
        geom = EntropyGeometry({"action_dim": 3})
        pi = PolicyTable(random_policy_rows(rng, 6, 3))
        vals = evaluate_exact(small_mdp, pi, null_reg)
        nxt = policy_iteration_step(small_mdp, pi, null_reg, vals=vals)
        res = stationarity_residual(pi, nxt, geom, null_reg, vals)
        assert np.all(res.per_probe_neg_advantage >= -1e-12)
        assert np.all(res.per_probe_div_forward >= 0.0)
        assert np.all(res.per_probe_div_backward >= 0.0)

    def test_state_subset(self, small_mdp, null_reg):
        geom = EntropyGeometry({"action_dim": 3})
        pi = PolicyTable.uniform(6, 3)
        vals = evaluate_exact(small_mdp, pi, null_reg)
        res = stationarity_residual(pi, pi, geom, null_reg, vals, probes=[0, 3])
        assert res.per_probe_neg_advantage.shape == (2,)
        assert res.neg_advantage == 0.0


class TestMdpModule:
    def test_gap_and_distance_vanish_at_optimum(self, mdp_module):
        oracle = mdp_module.oracle()
        assert abs(mdp_module.gap(oracle.policy)) <= 1e-12
        assert mdp_module.distance_to_opt(oracle.policy) <= 1e-12

    def test_uniform_weighting(self, small_mdp):
        module = MdpModule(small_mdp, {"weighting": "uniform"})
        np.testing.assert_allclose(module.oracle().nu, np.full(6, 1 / 6))

    def test_oracle_is_cached(self, mdp_module):
        assert mdp_module.oracle() is mdp_module.oracle()

    def test_summary(self, mdp_module):
        summary = mdp_module.summary()
        assert summary["module"] == "MdpModule"
        assert summary["n_states"] == 6
