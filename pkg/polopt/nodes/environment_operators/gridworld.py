"""
带陷阱的网格世界 (GridWorld with traps)

- 网格默认 10×10，4 个动作（上、下、左、右），撞墙时停在原地
- 陷阱位置只由 env_seed 决定
- 每次重置时随机放置智能体和目标（目标不在陷阱上，也不与智能体重合）
- 每步代价 step_cost，落入陷阱额外加 trap_cost；到达目标后不再产生代价
"""

from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
import scipy.sparse as sp

from ..geometry_operators import SimplexSet
from ..mdp_operators import TabularMdp
from .base import BaseEnvironment

MOVES = np.array([[0, 1], [0, -1], [-1, 0], [1, 0]])

GridState = Tuple[int, int, int, int]


@dataclass(frozen=True)
class GridWorldSpec:
    width: int = 10
    height: int = 10
    n_traps: int = 10
    step_cost: float = 1.0
    trap_cost: float = 5.0
    env_seed: int = 0
    episode_cap: int = 1000
    gamma: float = 0.99

    @classmethod
    def from_config(cls, config: Dict[str, Any] = None) -> "GridWorldSpec":
        config = config or {}
        return cls(
            width=int(config.get("width", 10)),
            height=int(config.get("height", 10)),
            n_traps=int(config.get("n_traps", 10)),
            step_cost=float(config.get("step_cost", 1.0)),
            trap_cost=float(config.get("trap_cost", 5.0)),
            env_seed=int(config.get("env_seed", 0)),
            episode_cap=int(config.get("episode_cap", 1000)),
            gamma=float(config.get("gamma", 0.99)),
        )

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def traps(self) -> np.ndarray:
        """陷阱格子的布尔掩码（按 x·height + y 编号）"""
        if self.n_traps >= self.n_cells - 1:
            raise ValueError("陷阱数量必须小于格子数减一")
        rng = np.random.default_rng(self.env_seed)
        mask = np.zeros(self.n_cells, dtype=bool)
        mask[rng.choice(self.n_cells, size=self.n_traps, replace=False)] = True
        return mask


class GridWorldEnvironment(BaseEnvironment):
    """
    网格世界环境

    状态为 (agent_x, agent_y, target_x, target_y)，动作为下标 0..3。
    """

    finite_actions = True

    def __init__(self, config: Dict[str, Any] = None):
        config = dict(config or {})
        self.spec = GridWorldSpec.from_config(config)
        config["gamma"] = self.spec.gamma
        config["c_bar"] = self.spec.step_cost + self.spec.trap_cost
        super().__init__(config)
        self.action_set = SimplexSet({"n_actions": 4})
        self.trap_mask = self.spec.traps()
        self._free_cells = np.flatnonzero(~self.trap_mask)

    def _cell(self, x: int, y: int) -> int:
        return x * self.spec.height + y

    def _xy(self, cell: int) -> Tuple[int, int]:
        return divmod(int(cell), self.spec.height)

    def move(self, x: int, y: int, action: int) -> Tuple[int, int]:
        dx, dy = MOVES[int(action)]
        return (
            int(np.clip(x + dx, 0, self.spec.width - 1)),
            int(np.clip(y + dy, 0, self.spec.height - 1)),
        )

    def reset(self, rng: np.random.Generator) -> GridState:
        agent = int(rng.integers(self.spec.n_cells))
        candidates = self._free_cells[self._free_cells != agent]
        target = int(rng.choice(candidates))
        return (*self._xy(agent), *self._xy(target))

    def sample_transition(self, state: GridState, action: int, rng=None) -> GridState:
        ax, ay, tx, ty = state
        if (ax, ay) == (tx, ty):
            return state
        return (*self.move(ax, ay, action), tx, ty)

    def cost(self, state: GridState, action: int) -> float:
        ax, ay, tx, ty = state
        if (ax, ay) == (tx, ty):
            return 0.0
        nx, ny = self.move(ax, ay, action)
        trap = self.trap_mask[self._cell(nx, ny)] and (nx, ny) != (tx, ty)
        return float(self.spec.step_cost + (self.spec.trap_cost if trap else 0.0))

    def embed(self, state: GridState) -> np.ndarray:
        ax, ay, tx, ty = state
        sx, sy = max(self.spec.width - 1, 1), max(self.spec.height - 1, 1)
        return np.array([ax / sx, ay / sy, tx / sx, ty / sy, (tx - ax) / sx, (ty - ay) / sy])

    def embed_afterstate(self, state: GridState, action: int) -> np.ndarray:
        """移动之后到目标的相对位移"""
        nx, ny, tx, ty = self.sample_transition(state, action)
        sx, sy = max(self.spec.width - 1, 1), max(self.spec.height - 1, 1)
        return np.array([(tx - nx) / sx, (ty - ny) / sy])

    def is_absorbing(self, state: GridState) -> bool:
        ax, ay, tx, ty = state
        return (ax, ay) == (tx, ty)

    def state_index(self, state: GridState) -> int:
        """表格导出中的状态编号"""
        ax, ay, tx, ty = state
        return self._cell(ax, ay) * self.spec.n_cells + self._cell(tx, ty)

    def state_key(self, state: GridState) -> int:
        return self.state_index(state)

    def index_state(self, index: int) -> GridState:
        agent, target = divmod(int(index), self.spec.n_cells)
        return (*self._xy(agent), *self._xy(target))

    def reset_distribution(self) -> np.ndarray:
        """重置分布在表格状态上的概率向量"""
        n = self.spec.n_cells
        weights = np.zeros(n * n)
        for agent in range(n):
            targets = self._free_cells[self._free_cells != agent]
            weights[agent * n + targets] = 1.0 / (n * len(targets))
        return weights


def gridworld_to_tabular(env: GridWorldEnvironment) -> TabularMdp:
    """
    枚举 (agent, target) 得到表格 MDP

    转移是确定性的，用 CSR 稀疏矩阵存储；目标状态对所有动作自环、代价为 0。
    重置分布写入 meta["weighting"]，作为精确目标函数的权重。
    """
    spec = env.spec
    n = spec.n_cells
    n_states = n * n
    index = np.arange(n_states)
    agent, target = np.divmod(index, n)
    ax, ay = np.divmod(agent, spec.height)
    done = agent == target
    successor = np.empty((n_states, len(MOVES)), dtype=int)
    cost = np.zeros((n_states, len(MOVES)))
    for a, (dx, dy) in enumerate(MOVES):
        cell = np.clip(ax + dx, 0, spec.width - 1) * spec.height + np.clip(ay + dy, 0, spec.height - 1)
        trap = env.trap_mask[cell] & (cell != target)
        successor[:, a] = np.where(done, index, cell * n + target)
        cost[:, a] = np.where(done, 0.0, spec.step_cost + spec.trap_cost * trap)
    kernel = sp.csr_matrix(
        (np.ones(successor.size), (np.arange(successor.size), successor.ravel())),
        shape=(successor.size, n_states),
    )
    meta = {
        "kind": "gridworld",
        "width": spec.width,
        "height": spec.height,
        "env_seed": spec.env_seed,
        "traps": np.flatnonzero(env.trap_mask).tolist(),
        "weighting": env.reset_distribution().tolist(),
    }
    return TabularMdp(kernel, cost, spec.gamma, spec.step_cost + spec.trap_cost, meta)
