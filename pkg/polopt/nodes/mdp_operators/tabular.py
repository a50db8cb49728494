"""
表格 MDP 数据类型

- TabularMdp: 转移核、代价矩阵、折扣因子（构造后只读）
- PolicyTable: 每行一个单纯形点的随机策略
- ValueFunctions: V^π 与 Q_0^π
- VisitationMeasure: 折扣访问测度 κ_s^π
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import scipy.sparse as sp

Kernel = Union[np.ndarray, sp.csr_matrix]

ROW_TOL = 1e-12


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """
    表格 MDP

    转移核按 (s·n_A + a, s') 存成二维矩阵，稠密或 CSR 稀疏均可；
    transition 属性给出 [n_S × n_A × n_S] 的三维视图（仅稠密）。

    Attributes:
        kernel: 转移核矩阵
        cost: 代价 c_0(s, i)
        gamma: 折扣因子 γ ∈ [0, 1)
        c_bar: 代价加正则的上界 c̄
    """

    kernel: Kernel
    cost: np.ndarray
    gamma: float
    c_bar: Optional[float] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        cost = _freeze(self.cost)
        if cost.ndim != 2:
            raise ValueError("代价矩阵必须是 [n_states × n_actions]")
        n_states, n_actions = cost.shape

        if sp.issparse(self.kernel):
            kernel = sp.csr_matrix(self.kernel, dtype=float)
            entries = kernel.data
            row_sums = np.asarray(kernel.sum(axis=1)).ravel()
        else:
            kernel = _freeze(np.asarray(self.kernel, dtype=float).reshape(n_states * n_actions, -1))
            entries = kernel
            row_sums = kernel.sum(axis=1)

        if kernel.shape != (n_states * n_actions, n_states):
            raise ValueError(f"转移核形状应为 ({n_states * n_actions}, {n_states})，实际为 {kernel.shape}")
        if np.any(entries < 0):
            raise ValueError("转移概率必须非负")
        if np.any(np.abs(row_sums - 1.0) > ROW_TOL):
            raise ValueError("每个 transition[s][a][·] 之和必须为 1（容差 1e-12）")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"折扣因子必须在 [0, 1) 内，实际为 {self.gamma}")
        if np.any(cost < 0):
            raise ValueError("代价必须非负")

        c_bar = float(np.max(cost)) if self.c_bar is None else float(self.c_bar)
        if c_bar < np.max(cost):
            raise ValueError("c̄ 不能小于最大代价")

        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "c_bar", c_bar)

    @classmethod
    def from_tensor(cls, transition, cost, gamma: float, c_bar: Optional[float] = None) -> "TabularMdp":
        """从 [n_S × n_A × n_S] 三维张量构建"""
        transition = np.asarray(transition, dtype=float)
        n_states, n_actions, _ = transition.shape
        return cls(transition.reshape(n_states * n_actions, n_states), cost, gamma, c_bar)

    @property
    def n_states(self) -> int:
        return int(self.cost.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.cost.shape[1])

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.kernel)

    @property
    def transition(self) -> np.ndarray:
        dense = self.kernel.toarray() if self.is_sparse else self.kernel
        return dense.reshape(self.n_states, self.n_actions, self.n_states)

    def expected_next(self, values: np.ndarray) -> np.ndarray:
        """Σ_{s'} P_0(s'|s,i) V(s')，形状 [n_S × n_A]"""
        return np.asarray(self.kernel @ values).reshape(self.n_states, self.n_actions)

    def policy_kernel(self, rows: np.ndarray) -> Kernel:
        """P^π(s, s') = Σ_i π(s)_i P_0(s'|s,i)"""
        n_s, n_a = self.n_states, self.n_actions
        if self.is_sparse:
            weights = sp.csr_matrix(
                (np.asarray(rows, dtype=float).ravel(),
                 (np.repeat(np.arange(n_s), n_a), np.arange(n_s * n_a))),
                shape=(n_s, n_s * n_a),
            )
            return (weights @ self.kernel).tocsr()
        return np.einsum("sa,sat->st", rows, self.transition)

    def to_dict(self) -> Dict[str, Any]:
        """JSON 友好的字典（行优先）"""
        payload: Dict[str, Any] = {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "gamma": self.gamma,
            "c_bar": self.c_bar,
            "cost": self.cost.ravel().tolist(),
        }
        if self.is_sparse:
            payload["transition_csr"] = {
                "data": self.kernel.data.tolist(),
                "indices": self.kernel.indices.tolist(),
                "indptr": self.kernel.indptr.tolist(),
            }
        else:
            payload["transition"] = self.kernel.ravel().tolist()
        if self.meta:
            payload["meta"] = self.meta
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TabularMdp":
        n_s, n_a = int(payload["n_states"]), int(payload["n_actions"])
        cost = np.asarray(payload["cost"], dtype=float).reshape(n_s, n_a)
        if "transition_csr" in payload:
            csr = payload["transition_csr"]
            kernel = sp.csr_matrix(
                (np.asarray(csr["data"], dtype=float), np.asarray(csr["indices"]), np.asarray(csr["indptr"])),
                shape=(n_s * n_a, n_s),
            )
        else:
            kernel = np.asarray(payload["transition"], dtype=float).reshape(n_s * n_a, n_s)
        return cls(kernel, cost, float(payload["gamma"]), payload.get("c_bar"), payload.get("meta", {}))

    def to_json(self, path: Union[str, Path, None] = None) -> str:
        """序列化为 JSON；给定路径时同时写文件"""
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "TabularMdp":
        """从 JSON 字符串或文件路径读取"""
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """表格随机策略，每行是单纯形上的点"""

    rows: np.ndarray

    def __post_init__(self):
        rows = _freeze(self.rows)
        if rows.ndim != 2:
            raise ValueError("策略表必须是二维矩阵")
        if np.any(rows < -ROW_TOL) or np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-10):
            raise ValueError("策略的每一行都必须是单纯形上的点")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "PolicyTable":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def from_actions(cls, actions, n_actions: int) -> "PolicyTable":
        """确定性策略"""
        return cls(np.eye(n_actions)[np.asarray(actions, dtype=int)])

    @property
    def n_states(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_actions(self) -> int:
        return int(self.rows.shape[1])

    def __call__(self, state) -> np.ndarray:
        return self.rows[state]


@dataclass(frozen=True, eq=False)
class ValueFunctions:
    """
    精确的价值函数

    Attributes:
        V: V^π
        Q: Q_0^π(s, i) = c_0(s,i) + h^{π(s)}(s) + γ Σ P_0(s'|s,i) V(s')
        h_pi: h^{π(s)}(s)
        residual: 线性方程组残差
    """

    V: np.ndarray
    Q: np.ndarray
    h_pi: np.ndarray
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class VisitationMeasure:
    """折扣状态访问测度 κ = (1−γ)(I − γP^πᵀ)^{-1} e_start"""

    kappa: np.ndarray
    start: Any
