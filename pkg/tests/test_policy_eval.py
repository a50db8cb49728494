import numpy as np
import pytest

from polopt.nodes.environment_operators import GridWorldEnvironment, LqrEnvironment, TabularEnvironment, random_tabular
from polopt.nodes.errors import ResetUnsupportedError
from polopt.nodes.geometry_operators import EntropyGeometry, NullRegularizer
from polopt.nodes.mdp_operators import PolicyTable, TabularMdp, evaluate_exact
from polopt.nodes.policy_eval import PolicyEvalModule
from polopt.nodes.policy_eval_operators import (
    EvalDataset,
    KernelAnchorFeatures,
    QModel,
    TabularOneHotFeatures,
    anchor_pool,
    diagnose_errors,
    exact_dataset,
    fit_augmented_L,
    fit_ridge,
    median_bandwidth,
    sample_dataset,
    table_policy,
    truncation_for,
)


def single_state_env(cost=0.5, gamma=0.8):
    mdp = TabularMdp.from_tensor(np.ones((1, 1, 1)), np.array([[cost]]), gamma)
    return TabularEnvironment(mdp), mdp


class NoResetEnvironment(TabularEnvironment):
    supports_reset = False


class TestSampling:
    def test_zero_cost_targets(self, rng):
        mdp = random_tabular(4, 2, 0.9, seed=0)
        env = TabularEnvironment(TabularMdp(mdp.kernel, np.zeros((4, 2)), 0.9))
        data = sample_dataset(env, table_policy(PolicyTable.uniform(4, 2)), 50, 10, 20, rng)
        np.testing.assert_array_equal(data.targets, 0.0)

    def test_targets_unbiased_for_exact_q(self, small_mdp, null_reg, rng):
        env = TabularEnvironment(small_mdp)
        pi = PolicyTable.uniform(6, 3)
        Q = evaluate_exact(small_mdp, pi, null_reg).Q
        T = truncation_for(small_mdp.gamma, small_mdp.c_bar)
        data = sample_dataset(env, table_policy(pi), 800, 20, T, rng)
        diff = data.targets - Q[data.states, data.actions]
        assert abs(diff.mean()) <= 4 * diff.std(ddof=1) / np.sqrt(len(diff))

    def test_truncation_bias(self, rng):
        env, _ = single_state_env()
        data = sample_dataset(env, lambda s: np.ones(1), 3, 0, 5, rng)
        exact = 0.5 / 0.2
        np.testing.assert_allclose(data.targets, 0.5 * (1 - 0.8 ** 5) / 0.2)
        assert np.all(exact - data.targets <= 0.8 ** 5 * 0.5 / 0.2 + 1e-12)

    def test_bootstrap_removes_truncation_bias(self, rng):
        env, _ = single_state_env()
        data = sample_dataset(env, lambda s: np.ones(1), 3, 0, 1, rng, bootstrap=lambda s: 2.5)
        np.testing.assert_allclose(data.targets, 2.5)

    def test_independent_of_worker_count(self, small_mdp):
        env = TabularEnvironment(small_mdp)
        policy = table_policy(PolicyTable.uniform(6, 3))
        serial = sample_dataset(env, policy, 40, 5, 30, np.random.default_rng(3), n_workers=1)
        threaded = sample_dataset(env, policy, 40, 5, 30, np.random.default_rng(3), n_workers=4)
        np.testing.assert_array_equal(serial.targets, threaded.targets)
        assert serial.states == threaded.states

    def test_env_steps_counted(self, small_mdp, rng):
        env = TabularEnvironment(small_mdp)
        data = sample_dataset(env, table_policy(PolicyTable.uniform(6, 3)), 10, 4, 7, rng)
        assert data.env_steps == 10 * (4 + 7)

    def test_reset_required(self, small_mdp, rng):
        env = NoResetEnvironment(small_mdp)
        with pytest.raises(ResetUnsupportedError):
            sample_dataset(env, table_policy(PolicyTable.uniform(6, 3)), 5, 1, 1, rng)

    def test_truncation_length(self):
        T = truncation_for(0.9, 1.0)
        assert 0.9 ** T / 0.1 <= 1e-6 < 0.9 ** (T - 1) / 0.1

    def test_csv_needs_inputs(self, tmp_path):
        data = EvalDataset(states=[0], actions=[0], targets=np.zeros(1))
        with pytest.raises(ValueError):
            data.to_csv(tmp_path / "d.csv")


class TestRegression:
    def test_zero_targets_give_zero_weights(self, rng):
        Z = rng.normal(size=(50, 3))
        model = fit_ridge(EvalDataset([], [], np.zeros(50), inputs=Z), KernelAnchorFeatures({"n_anchors": 20}))
        np.testing.assert_array_equal(model.theta, 0.0)

    def test_one_hot_recovers_exact_q(self, small_mdp, null_reg, rng):
        env = TabularEnvironment(small_mdp)
        pi = PolicyTable(rng.dirichlet(np.ones(3), size=6))
        fmap = TabularOneHotFeatures({"n_states": 6, "n_actions": 3})
        model = fit_ridge(exact_dataset(small_mdp, pi, null_reg), fmap, 1e-12, env)
        np.testing.assert_allclose(model.q0_table(range(6)), evaluate_exact(small_mdp, pi, null_reg).Q, atol=1e-8)

    def test_one_hot_averages_repeated_samples(self):
        env, _ = single_state_env()
        fmap = TabularOneHotFeatures({"n_states": 1, "n_actions": 1})
        data = EvalDataset([0, 0, 0, 0], [0, 0, 0, 0], np.array([1.0, 2.0, 3.0, 6.0]))
        model = fit_ridge(data, fmap, 1e-12, env)
        np.testing.assert_allclose(model.value(0, 0), 3.0, atol=1e-9)

    def test_normal_equations(self, rng):
        Z = rng.uniform(-1, 1, size=(300, 2))
        y = np.sin(3 * Z[:, 0]) + Z[:, 1]
        fmap = KernelAnchorFeatures({"n_anchors": 64, "n_frequencies": 128, "seed": 1})
        model = fit_ridge(EvalDataset([], [], y, inputs=Z), fmap, 0.5)
        Phi = fmap.transform(Z)
        residual = Phi.T @ (Phi @ model.theta - y) + 0.5 * model.theta
        assert np.max(np.abs(residual)) <= 1e-8 * max(1.0, np.max(np.abs(Phi.T @ y)))

    def test_fit_is_deterministic(self, rng):
        Z = rng.uniform(-1, 1, size=(100, 2))
        y = Z[:, 0] ** 2
        a = fit_ridge(EvalDataset([], [], y, inputs=Z), KernelAnchorFeatures({"seed": 4}))
        b = fit_ridge(EvalDataset([], [], y, inputs=Z), KernelAnchorFeatures({"seed": 4}))
        np.testing.assert_array_equal(a.theta, b.theta)

    def test_augmented_l_components(self, small_mdp, null_reg, rng):
        env = TabularEnvironment(small_mdp)
        pi = PolicyTable(rng.dirichlet(np.ones(3), size=6))
        geom = EntropyGeometry({"action_dim": 3})
        fmap = TabularOneHotFeatures({"n_states": 6, "n_actions": 3})
        model = fit_augmented_L(exact_dataset(small_mdp, pi, null_reg), table_policy(pi), geom, 2.0, fmap,
                                ridge_lambda=1e-12, env=env)
        assert model.target_kind == "augmented_l"
        expected = geom.grad_omega(pi.rows) / 2.0
        np.testing.assert_allclose(model.omega_table(range(6)), expected, atol=1e-8)
        np.testing.assert_allclose(model.l0(3), model.q0(3) - expected[3], atol=1e-8)

    def test_action_gradient_matches_finite_differences(self, rng):
        env = LqrEnvironment()
        fmap = KernelAnchorFeatures({"n_anchors": 32, "n_frequencies": 64, "seed": 2})
        states = [env.reset(rng) for _ in range(40)]
        actions = [env.action_set.sample_uniform(rng) for _ in range(40)]
        fmap.fit(fmap.encode(env, states, actions))
        model = QModel(theta=rng.normal(size=fmap.n_features), feature_map=fmap, env=env)
        s, a = states[0], np.array([0.3, -1.2])
        h = 1e-6
        numeric = np.array([
            (model.value(s, a + h * e) - model.value(s, a - h * e)) / (2 * h) for e in np.eye(2)
        ])
        np.testing.assert_allclose(model.action_gradient(s, a), numeric, rtol=1e-5, atol=1e-7)

    def test_median_bandwidth(self):
        assert median_bandwidth(np.array([[0.0, 0.0], [3.0, 4.0]])) == 5.0
        assert median_bandwidth(np.zeros((1, 2))) == 1.0

    def test_transform_requires_fit(self):
        with pytest.raises(ValueError):
            KernelAnchorFeatures().transform(np.zeros((1, 2)))


class TestDiagnostics:
    def test_exact_refits_have_no_error(self):
        exact = np.arange(6.0).reshape(3, 2)
        report = diagnose_errors(lambda stream: exact, exact, [0, 1, 2], n_resamples=3, best_fit=exact)
        assert report.det_error == 0.0
        assert report.sto_error == 0.0
        assert report.app_error == 0.0

    def test_constant_offset_is_deterministic_error(self):
        exact = np.zeros((4, 2))
        report = diagnose_errors(lambda stream: exact + 0.25, exact, list(range(4)), n_resamples=5)
        np.testing.assert_allclose(report.det_error, 0.25)
        assert report.sto_error == 0.0

    def test_noise_is_stochastic_error(self):
        exact = np.zeros((4, 2))
        report = diagnose_errors(lambda stream: stream.normal(size=(4, 2)), exact, list(range(4)), n_resamples=50)
        assert report.sto_error > 0.1
        assert report.det_error < report.sto_error

    def test_needs_two_resamples(self):
        with pytest.raises(ValueError):
            diagnose_errors(lambda stream: np.zeros((1, 1)), np.zeros((1, 1)), [0], n_resamples=1)


class TestPolicyEvalModule:
    def test_exact_oracle_needs_mdp(self, small_mdp):
        with pytest.raises(ValueError):
            PolicyEvalModule(TabularEnvironment(small_mdp), {"oracle": "exact"})

    def test_one_hot_needs_mdp(self, small_mdp):
        with pytest.raises(ValueError):
            PolicyEvalModule(TabularEnvironment(small_mdp), {"features": {"kind": "tabular_one_hot"}})

    def test_exact_collect_and_diagnose(self, small_mdp, rng):
        env = TabularEnvironment(small_mdp)
        evaluator = PolicyEvalModule(env, {
            "oracle": "exact",
            "features": {"kind": "tabular_one_hot"},
            "ridge_lambda": 1e-12,
            "n_resamples": 3,
        }, small_mdp)
        pi = PolicyTable.uniform(6, 3)
        data = evaluator.collect(table_policy(pi), rng, pi_table=pi)
        assert len(data) == 18 and data.env_steps == 0
        report = evaluator.diagnose(table_policy(pi), pi, rng)
        assert report.det_error <= 1e-8
        assert report.sto_error <= 1e-16

    def test_monte_carlo_module(self, small_mdp, rng):
        env = TabularEnvironment(small_mdp)
        evaluator = PolicyEvalModule(env, {"n_samples": 200, "burn_in": 5, "truncation": 40,
                                           "features": {"n_anchors": 32, "n_frequencies": 64}})
        pi = PolicyTable.uniform(6, 3)
        data = evaluator.collect(table_policy(pi), rng)
        model = evaluator.fit(data)
        assert model.q0_table(range(6)).shape == (6, 3)
        assert evaluator.summary()["truncation"] == 40

    def test_score_zero_cost(self, rng):
        mdp = random_tabular(3, 2, 0.9, seed=0)
        env = TabularEnvironment(TabularMdp(mdp.kernel, np.zeros((3, 2)), 0.9))
        evaluator = PolicyEvalModule(env, {"score_episodes": 3, "score_horizon": 10})
        scored = evaluator.score(table_policy(PolicyTable.uniform(3, 2)), rng)
        assert scored.f_hat == 0.0 and scored.episode_score == 0.0
        assert scored.truncated == 0.0 and scored.bootstrapped == 0.0

    def test_score_return_variants(self, rng):
        env, _ = single_state_env(cost=1.0, gamma=0.8)
        evaluator = PolicyEvalModule(env, {"score_episodes": 2, "score_horizon": 5})
        policy = lambda s: np.ones(1)
        plain = evaluator.score(policy, rng)
        truncated = (1 - 0.8 ** 5) / 0.2
        np.testing.assert_allclose(plain.truncated, truncated)
        np.testing.assert_allclose(plain.bootstrapped, truncated)
        corrected = evaluator.score(policy, rng, bootstrap=lambda s: 5.0)
        np.testing.assert_allclose(corrected.truncated, truncated)
        np.testing.assert_allclose(corrected.bootstrapped, 5.0)
        assert corrected.truncated <= corrected.f_hat

    def test_reset_anchors_are_seeded(self):
        env = GridWorldEnvironment({"width": 5, "height": 5, "n_traps": 2})
        evaluator = PolicyEvalModule(env, {"features": {"n_anchors": 16, "n_frequencies": 32,
                                                        "action_encoding": "afterstate"}})
        fmap = evaluator.prepare_features()
        assert fmap.is_fitted and fmap.n_features == 16
        assert fmap.anchors.shape == (16, 2)
        again = PolicyEvalModule(env, {"features": {"n_anchors": 16, "n_frequencies": 32,
                                                    "action_encoding": "afterstate"}}).prepare_features()
        np.testing.assert_array_equal(fmap.anchors, again.anchors)

    def test_data_anchors_wait_for_first_batch(self, small_mdp):
        evaluator = PolicyEvalModule(TabularEnvironment(small_mdp), {"features": {"anchor_source": "data"}})
        assert not evaluator.prepare_features().is_fitted


class TestAnchorPool:
    def test_states_from_reset(self, rng):
        env = GridWorldEnvironment({"width": 4, "height": 4, "n_traps": 1})
        states, actions = anchor_pool(env, 30, rng)
        assert len(states) == len(actions) == 30
        assert all(not env.is_absorbing(s) for s in states)
        assert all(0 <= a < 4 for a in actions)

    def test_afterstate_encoding(self):
        env = GridWorldEnvironment({"width": 5, "height": 5, "n_traps": 0})
        fmap = KernelAnchorFeatures({"action_encoding": "afterstate"})
        Z = fmap.encode(env, [(0, 0, 2, 4), (1, 0, 2, 4)], [3, 0])
        np.testing.assert_allclose(Z, [[0.25, 1.0], [0.25, 0.75]])

    def test_unknown_encoding_falls_back(self, capsys):
        fmap = KernelAnchorFeatures({"action_encoding": "pixels"})
        assert fmap.action_encoding == "one_hot"
        assert "⚠️" in capsys.readouterr().out
