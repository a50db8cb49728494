from types import SimpleNamespace

import numpy as np
import pytest

from polopt.nodes.errors import ScheduleError
from polopt.nodes.geometry_operators import EntropyGeometry, EuclideanGeometry, NullRegularizer
from polopt.nodes.mdp_operators import PolicyTable, evaluate_exact, policy_iteration_step
from polopt.nodes.pmd import PmdModule, pmd_step_exact

from .conftest import exact_config, random_policy_rows


class TestPmdStepExact:
    def test_constant_q_keeps_policy(self, small_mdp, rng):
        pi = PolicyTable(random_policy_rows(rng, small_mdp.n_states, small_mdp.n_actions))
        vals = SimpleNamespace(Q=np.tile(rng.uniform(size=(small_mdp.n_states, 1)), (1, small_mdp.n_actions)))
        for geom in (EntropyGeometry({"action_dim": 3}), EuclideanGeometry({"action_dim": 3})):
            nxt = pmd_step_exact(small_mdp, pi, vals, geom, NullRegularizer(), 0.7)
            np.testing.assert_allclose(nxt.rows, pi.rows, atol=1e-8)

    def test_infinite_step_is_policy_iteration(self, small_mdp, null_reg):
        pi = PolicyTable.uniform(small_mdp.n_states, small_mdp.n_actions)
        vals = evaluate_exact(small_mdp, pi, null_reg)
        greedy = pmd_step_exact(small_mdp, pi, vals, EntropyGeometry(), null_reg, np.inf)
        expected = policy_iteration_step(small_mdp, pi, null_reg, vals=vals)
        np.testing.assert_allclose(greedy.rows, expected.rows, atol=1e-12)

    def test_large_step_approaches_greedy(self, small_mdp, null_reg):
        pi = PolicyTable.uniform(small_mdp.n_states, small_mdp.n_actions)
        vals = evaluate_exact(small_mdp, pi, null_reg)
        nxt = pmd_step_exact(small_mdp, pi, vals, EntropyGeometry(), null_reg, 1e6)
        np.testing.assert_array_equal(np.argmax(nxt.rows, axis=1), np.argmin(vals.Q, axis=1))
        assert np.min(np.max(nxt.rows, axis=1)) > 0.999

    def test_step_must_be_positive(self, small_mdp, null_reg):
        pi = PolicyTable.uniform(small_mdp.n_states, small_mdp.n_actions)
        vals = evaluate_exact(small_mdp, pi, null_reg)
        with pytest.raises(ValueError):
            pmd_step_exact(small_mdp, pi, vals, EntropyGeometry(), null_reg, 0.0)


class TestExactPmd:
    def test_linear_rate(self):
        config = exact_config(k_max=100, mode="exact", geometry={"kind": "entropy"},
                              schedule={"kind": "geometric"})
        trace = PmdModule(config).run()
        gap, d0 = trace.column("gap"), trace.column("D_to_opt")[0]
        k = np.arange(len(gap))
        assert np.all(gap <= 0.9 ** k * gap[0] + 0.9 ** (k - 1.0) * d0 + 1e-10)
        assert gap[-1] <= 1e-3 * (gap[0] + d0)

    def test_values_never_increase(self):
        config = exact_config(k_max=20, mode="exact", schedule={"kind": "constant", "eta": 0.5})
        trace = PmdModule(config).run()
        assert np.isnan(trace.column("max_value_increase")[0])
        assert np.all(trace.column("max_value_increase")[1:] <= 1e-9)

    def test_regularized_gap_converges(self):
        config = exact_config(k_max=150, mode="exact", regularizer={"kind": "kl_to_anchor", "weight": 0.1},
                              schedule={"kind": "geometric"})
        gap = PmdModule(config).run().column("gap")
        assert gap[-1] < 1e-4
        assert np.all(gap >= -1e-9)

    def test_trace_shape_and_timing(self):
        trace = PmdModule(exact_config(k_max=5, mode="exact")).run()
        assert len(trace) == 6
        assert list(trace.column("iteration")) == list(range(6))
        assert np.all(np.isnan(trace.column("wall_ms")))

        timed = PmdModule(exact_config(k_max=5, mode="exact", record_timing=True)).run()
        assert np.all(timed.column("wall_ms")[1:] >= 0.0)

    def test_keep_policies(self):
        trace = PmdModule(exact_config(k_max=4, mode="exact", keep_policies=True)).run()
        assert len(trace.policies) == 5
        np.testing.assert_allclose(trace.policies[0].rows, 1.0 / 3.0)

    def test_min_neg_psi_is_running_minimum(self):
        trace = PmdModule(exact_config(k_max=15, mode="exact")).run()
        running = trace.column("min_neg_psi")[1:]
        assert np.all(np.diff(running) <= 1e-12)
        assert trace.best_index is not None
        assert 0 <= trace.random_index < 15

    def test_rerun_with_other_horizon(self):
        module = PmdModule(exact_config(k_max=5, mode="exact"))
        assert len(module.run(3)) == 4
        assert module.schedule.horizon == 3


class TestNonconvexPmd:
    def test_nonconvex_schedule(self):
        config = exact_config(k_max=30, mode="exact", geometry={"kind": "euclidean"},
                              regularizer={"kind": "concave_quadratic", "weight": 0.5},
                              schedule={"kind": "nonconvex"})
        module = PmdModule(config)
        assert module.schedule.eta(0) == pytest.approx(1.0)
        trace = module.run()
        assert np.all(np.isfinite(trace.column("f")))
        assert np.all(trace.column("min_neg_psi")[1:] >= -1e-6)

    def test_step_rejected_for_concave_regularizer(self):
        config = exact_config(mode="exact", geometry={"kind": "euclidean"},
                              regularizer={"kind": "concave_quadratic", "weight": 0.5},
                              schedule={"kind": "constant", "eta": 4.0})
        with pytest.raises(ScheduleError) as err:
            PmdModule(config)
        assert err.value.rule == "curvature_step"


class TestFiniteFaPmd:
    def test_default_mode(self):
        module = PmdModule(exact_config(eval={"n_samples": 10, "truncation": 5}))
        assert module.mode == "finite_fa"
        summary = module.summary()
        assert summary["operator"] == "FiniteFaPmdOperator"
        assert summary["oracle"] is True

    def test_one_hot_exact_targets_match_exact(self):
        schedule = {"kind": "geometric"}
        eval_config = {"oracle": "exact", "features": {"kind": "tabular_one_hot"}, "ridge_lambda": 1e-12,
                       "score": False}
        exact = PmdModule(exact_config(k_max=10, mode="exact", schedule=schedule)).run()
        fa = PmdModule(exact_config(k_max=10, mode="finite_fa", schedule=schedule, eval=eval_config)).run()
        np.testing.assert_allclose(fa.column("f"), exact.column("f"), atol=1e-8)

    def test_sampled_run_counts_env_steps(self):
        eval_config = {"n_samples": 20, "burn_in": 3, "truncation": 10, "features": {"kind": "tabular_one_hot"},
                       "score": False}
        trace = PmdModule(exact_config(k_max=3, mode="finite_fa", eval=eval_config)).run()
        assert trace.column("env_steps")[0] == 0
        np.testing.assert_array_equal(trace.column("env_steps")[1:], 20 * (3 + 10))
        assert np.all(np.isfinite(trace.column("gap")))


@pytest.mark.slow
class TestContinuousPmd:
    def test_lqr_smoke(self):
        config = {
            "k_max": 2,
            "environment": {"kind": "lqr"},
            "regularizer": {"kind": "quadratic", "weight": 1.0},
            "eval": {"n_samples": 30, "burn_in": 5, "truncation": 20, "score_episodes": 2, "n_probes": 4},
        }
        module = PmdModule(config)
        assert module.mode == "continuous"
        trace = module.run()
        assert len(trace) == 3
        assert np.all(np.isfinite(trace.column("f")))
        assert np.all(trace.column("env_steps")[1:] == 30 * 25)
        assert np.all(np.isfinite(trace.column("neg_psi")[1:]))
