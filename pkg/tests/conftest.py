"""测试公共夹具"""

import numpy as np
import pytest

from polopt.nodes.environment_operators import random_tabular
from polopt.nodes.geometry_operators import NullRegularizer
from polopt.nodes.mdp import MdpModule


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def small_mdp():
    return random_tabular(6, 3, 0.9, seed=7)


@pytest.fixture
def null_reg():
    return NullRegularizer()


@pytest.fixture
def mdp_module(small_mdp):
    return MdpModule(small_mdp)


def random_policy_rows(rng, n_states, n_actions):
    return rng.dirichlet(np.ones(n_actions), size=n_states)


def exact_config(n_states=6, n_actions=3, gamma=0.9, seed=7, k_max=30, **sections):
    """表格精确求解的最小配置"""
    config = {
        "k_max": k_max,
        "environment": {
            "kind": "random_tabular",
            "n_states": n_states,
            "n_actions": n_actions,
            "gamma": gamma,
            "seed": seed,
        },
    }
    config.update(sections)
    return config
