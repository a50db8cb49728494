"""
表格环境

把 TabularMdp 包装成可采样的环境，供 Monte Carlo 评估与函数逼近运行使用。
"""

from typing import Any, Dict, Optional

import numpy as np

from ..geometry_operators import SimplexSet
from ..mdp_operators import TabularMdp
from .base import BaseEnvironment


class TabularEnvironment(BaseEnvironment):
    """
    表格 MDP 环境

    状态是整数下标，动作是动作下标。初始分布默认均匀，也可以显式给出。
    """

    finite_actions = True

    def __init__(self, mdp: TabularMdp, config: Dict[str, Any] = None,
                 initial: Optional[np.ndarray] = None):
        config = dict(config or {})
        config["gamma"] = mdp.gamma
        config["c_bar"] = mdp.c_bar
        super().__init__(config)
        self.mdp = mdp
        self.action_set = SimplexSet({"n_actions": mdp.n_actions})
        if initial is None:
            initial = np.full(mdp.n_states, 1.0 / mdp.n_states)
        self.initial = np.asarray(initial, dtype=float)
        if self.initial.shape != (mdp.n_states,) or abs(self.initial.sum() - 1.0) > 1e-10:
            raise ValueError("初始分布必须是长度为 n_states 的概率向量")
        self._absorbing = self._find_absorbing()

    def _find_absorbing(self) -> np.ndarray:
        """所有动作都自环且零代价的状态"""
        n_s, n_a = self.mdp.n_states, self.mdp.n_actions
        rows = np.arange(n_s * n_a)
        cols = np.repeat(np.arange(n_s), n_a)
        kernel = self.mdp.kernel
        self_prob = np.asarray(kernel[rows, cols]).ravel().reshape(n_s, n_a)
        return np.all(np.abs(self_prob - 1.0) <= 1e-12, axis=1) & np.all(self.mdp.cost == 0.0, axis=1)

    def reset(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.mdp.n_states, p=self.initial))

    def sample_transition(self, state: int, action: int, rng: np.random.Generator) -> int:
        row = int(state) * self.mdp.n_actions + int(action)
        if self.mdp.is_sparse:
            start, end = self.mdp.kernel.indptr[row], self.mdp.kernel.indptr[row + 1]
            support = self.mdp.kernel.indices[start:end]
            probs = self.mdp.kernel.data[start:end]
            return int(support[rng.choice(len(support), p=probs / probs.sum())])
        probs = self.mdp.kernel[row]
        return int(rng.choice(self.mdp.n_states, p=probs / probs.sum()))

    def cost(self, state: int, action: int) -> float:
        return float(self.mdp.cost[int(state), int(action)])

    def embed(self, state: int) -> np.ndarray:
        out = np.zeros(self.mdp.n_states)
        out[int(state)] = 1.0
        return out

    def state_key(self, state) -> int:
        return int(state)

    def is_absorbing(self, state) -> bool:
        return bool(self._absorbing[int(state)])
