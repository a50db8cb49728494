import numpy as np
import pytest

from polopt.nodes.environment_operators import (
    GridWorldEnvironment,
    LqrEnvironment,
    LqrSpec,
    PendulumEnvironment,
    PendulumSpec,
    TabularEnvironment,
    gridworld_to_tabular,
    linear_feedback_cost,
    lqr_step,
    pendulum_step,
    random_tabular,
    riccati_feedback,
)
from polopt.nodes.environments import EnvironmentModule
from polopt.nodes.geometry_operators import NullRegularizer
from polopt.nodes.mdp_operators import value_iteration


class TestRandomTabular:
    def test_deterministic_given_seed(self):
        a = random_tabular(5, 2, 0.9, seed=3)
        b = random_tabular(5, 2, 0.9, seed=3)
        np.testing.assert_array_equal(a.kernel, b.kernel)
        np.testing.assert_array_equal(a.cost, b.cost)

    def test_mixing_keeps_rows_positive(self):
        mdp = random_tabular(6, 3, 0.9, sparsity=0.8, seed=1)
        assert np.all(mdp.kernel > 0)
        np.testing.assert_allclose(mdp.kernel.sum(axis=1), 1.0, atol=1e-12)
        assert np.all((mdp.cost >= 0) & (mdp.cost <= 1))

    def test_sparsity_range(self):
        with pytest.raises(ValueError):
            random_tabular(3, 2, 0.9, sparsity=1.0)


class TestGridWorld:
    def test_target_absorbing_and_free(self):
        env = GridWorldEnvironment({"width": 4, "height": 4, "n_traps": 0})
        state = (1, 2, 1, 2)
        for a in range(4):
            assert env.cost(state, a) == 0.0
            assert env.sample_transition(state, a) == state
        assert env.is_absorbing(state)

    def test_adjacent_target_costs_one_step(self):
        env = GridWorldEnvironment({"width": 4, "height": 4, "n_traps": 0, "gamma": 0.99})
        mdp = gridworld_to_tabular(env)
        V, _ = value_iteration(mdp, NullRegularizer())
        np.testing.assert_allclose(V[env.state_index((0, 0, 0, 1))], 1.0, atol=1e-9)

    def test_shortest_path_without_traps(self):
        env = GridWorldEnvironment({"width": 4, "height": 3, "n_traps": 0, "gamma": 0.9})
        mdp = gridworld_to_tabular(env)
        V, _ = value_iteration(mdp, NullRegularizer())
        for s in range(mdp.n_states):
            ax, ay, tx, ty = env.index_state(s)
            d = abs(ax - tx) + abs(ay - ty)
            np.testing.assert_allclose(V[s], (1 - 0.9 ** d) / (1 - 0.9), atol=1e-8)

    def test_trap_landing_cost(self):
        env = GridWorldEnvironment({"width": 5, "height": 5, "n_traps": 3, "env_seed": 2})
        trap = int(np.flatnonzero(env.trap_mask)[0])
        tx, ty = divmod(trap, 5)
        for a, (dx, dy) in enumerate([(0, 1), (0, -1), (-1, 0), (1, 0)]):
            ax, ay = tx - dx, ty - dy
            if 0 <= ax < 5 and 0 <= ay < 5 and (ax, ay) != (tx, ty):
                target = next(c for c in range(25) if c not in (trap, ax * 5 + ay))
                state = (ax, ay, *divmod(target, 5))
                assert env.cost(state, a) == 6.0
                return
        pytest.fail("trap has no in-grid neighbour")

    def test_traps_depend_only_on_env_seed(self):
        a = GridWorldEnvironment({"n_traps": 10, "env_seed": 5})
        b = GridWorldEnvironment({"n_traps": 10, "env_seed": 5})
        np.testing.assert_array_equal(a.trap_mask, b.trap_mask)
        assert a.trap_mask.sum() == 10

    def test_reset_avoids_traps_and_agent(self, rng):
        env = GridWorldEnvironment({"n_traps": 10, "env_seed": 1})
        for _ in range(100):
            ax, ay, tx, ty = env.reset(rng)
            assert (ax, ay) != (tx, ty)
            assert not env.trap_mask[tx * 10 + ty]

    def test_tabular_export(self, tmp_path):
        env = GridWorldEnvironment({"width": 3, "height": 3, "n_traps": 1})
        mdp = gridworld_to_tabular(env)
        assert mdp.is_sparse
        assert mdp.n_states == 81 and mdp.n_actions == 4
        np.testing.assert_allclose(np.sum(mdp.meta["weighting"]), 1.0)
        assert mdp.c_bar == 6.0

    def test_tabular_export_matches_step(self):
        env = GridWorldEnvironment({"width": 4, "height": 3, "n_traps": 3, "env_seed": 4})
        mdp = gridworld_to_tabular(env)
        transition = mdp.transition
        for s in range(mdp.n_states):
            state = env.index_state(s)
            for a in range(4):
                successor = env.state_index(env.sample_transition(state, a))
                assert transition[s, a, successor] == 1.0
                assert mdp.cost[s, a] == env.cost(state, a)

    def test_afterstate_embedding(self):
        env = GridWorldEnvironment({"width": 5, "height": 5, "n_traps": 0})
        np.testing.assert_allclose(env.embed_afterstate((0, 0, 2, 4), 0), [0.5, 0.75])
        np.testing.assert_allclose(env.embed_afterstate((0, 0, 2, 4), 1), [0.5, 1.0])
        np.testing.assert_allclose(env.embed_afterstate((2, 3, 2, 4), 0), [0.0, 0.0])

    def test_afterstate_unsupported(self, rng):
        env = LqrEnvironment({})
        with pytest.raises(NotImplementedError):
            env.embed_afterstate(env.reset(rng), 0)


class TestLqr:
    def test_zero_dynamics(self, rng):
        spec = LqrSpec(A=np.zeros((2, 2)), B=np.zeros((2, 1)), Qc=np.eye(2), Rc=np.eye(1),
                       noise_cov=np.zeros((2, 2)))
        x_next, cost = lqr_step(spec, np.array([1.0, -2.0]), np.array([0.5]), rng)
        np.testing.assert_array_equal(x_next, 0.0)
        assert cost == pytest.approx(5.25)

    def test_origin_is_free_without_input(self, rng):
        spec = LqrSpec(noise_cov=np.zeros((4, 4)))
        x = np.zeros(4)
        for _ in range(20):
            x, cost = lqr_step(spec, x, np.zeros(2), rng)
            assert cost == 0.0
        np.testing.assert_array_equal(x, 0.0)

    def test_cost_clipped(self, rng):
        spec = LqrSpec(c_bar=10.0)
        _, cost = lqr_step(spec, np.full(4, 100.0), np.zeros(2), rng)
        assert cost == 10.0

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            LqrSpec(A=np.eye(3))

    def test_riccati_beats_zero_policy(self):
        env = LqrEnvironment()
        K = riccati_feedback(env.spec)
        riccati = linear_feedback_cost(env, K, np.random.default_rng(0), n_rollouts=30, horizon=150)
        zero = linear_feedback_cost(env, np.zeros_like(K), np.random.default_rng(0), n_rollouts=30, horizon=150)
        assert riccati < zero

    def test_riccati_beats_perturbed_feedback(self, rng):
        for _ in range(20):
            A = 0.3 * rng.normal(size=(3, 3))
            B = rng.normal(size=(3, 2))
            env = LqrEnvironment({
                "A": A, "B": B, "Qc": np.eye(3), "Rc": np.eye(2),
                "noise_cov": np.zeros((3, 3)), "action_bound": 1e6, "c_bar": 1e12,
            })
            K = riccati_feedback(env.spec)
            other = K + 0.05 * rng.normal(size=K.shape)
            best = linear_feedback_cost(env, K, np.random.default_rng(1), n_rollouts=5, horizon=300)
            worse = linear_feedback_cost(env, other, np.random.default_rng(1), n_rollouts=5, horizon=300)
            assert best <= worse + 1e-9


class TestPendulum:
    def test_falls_into_absorbing_state(self, rng):
        spec = PendulumSpec(noise_std=0.0)
        state, cost = pendulum_step(spec, (1.6, 0.5, 0), np.array([0.0]), rng)
        assert cost == 0.0
        assert state[2] == 1
        nxt, cost = pendulum_step(spec, state, np.array([0.0]), rng)
        assert nxt == state and cost == 2.0

    def test_torque_clipped(self, rng):
        spec = PendulumSpec(noise_std=0.0)
        a, _ = pendulum_step(spec, (0.0, 0.0, 0), np.array([100.0]), rng)
        b, _ = pendulum_step(spec, (0.0, 0.0, 0), np.array([spec.torque_limit]), rng)
        assert a == b

    def test_episode_score_counts_balanced_steps(self):
        env = PendulumEnvironment()
        assert env.episode_score([0.0, 0.0, 0.0, 2.0, 2.0]) == -3.0
        assert env.absorbing_value((2.0, 0.0, 1)) == pytest.approx(2.0 / 0.01)


class TestEnvironmentModule:
    def test_random_tabular(self):
        module = EnvironmentModule({"kind": "random_tabular", "n_states": 4, "n_actions": 2, "seed": 1})
        assert isinstance(module.env, TabularEnvironment)
        assert module.is_tabular
        assert module.weighting() is None
        assert module.tabular().n_states == 4

    def test_gridworld_weighting_is_reset_distribution(self):
        module = EnvironmentModule({"kind": "gridworld", "width": 3, "height": 3, "n_traps": 1})
        np.testing.assert_allclose(module.weighting(), module.env.reset_distribution())
        assert module.to_state_index((0, 0, 1, 1)) == module.env.state_index((0, 0, 1, 1))

    def test_tabular_json(self, tmp_path):
        path = tmp_path / "mdp.json"
        random_tabular(3, 2, 0.8, seed=2).to_json(path)
        module = EnvironmentModule({"kind": "tabular_json", "path": str(path)})
        assert module.tabular().gamma == 0.8

    def test_continuous_has_no_table(self):
        module = EnvironmentModule({"kind": "lqr"})
        assert not module.is_tabular
        assert module.tabular() is None
        assert module.baseline_feedback().shape == (2, 4)

    def test_unknown_kind_falls_back(self, capsys):
        module = EnvironmentModule({"kind": "mystery"})
        assert module.kind == "random_tabular"
        assert "⚠️" in capsys.readouterr().out

    def test_tabular_env_absorbing_detection(self):
        from polopt.nodes.mdp_operators import TabularMdp

        mdp = TabularMdp.from_tensor(np.array([[[1.0, 0.0]], [[0.5, 0.5]]]), np.array([[0.0], [1.0]]), 0.9)
        env = TabularEnvironment(mdp)
        assert env.is_absorbing(0)
        assert not env.is_absorbing(1)
