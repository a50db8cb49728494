"""
Environment Operator 基类
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..geometry_operators import BaseActionSet


class BaseEnvironment(ABC):
    """
    环境基类

    所有环境都实现同一套接口：重置、转移采样、代价、状态嵌入和吸收态判断。
    有限动作环境的 sample_transition / cost 接收动作下标。
    """

    finite_actions: bool = False
    supports_reset: bool = True

    def __init__(self, config: Dict[str, Any] = None):
        """
        初始化 operator

        Args:
            config: 配置字典
        """
        self.config = config or {}
        self.name = self.__class__.__name__
        self.gamma = float(self.config.get("gamma", 0.9))
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"折扣因子必须在 [0, 1) 内，实际为 {self.gamma}")
        self.action_set: Optional[BaseActionSet] = None
        self.c_bar: float = float(self.config.get("c_bar", 1.0))

    @abstractmethod
    def reset(self, rng: np.random.Generator):
        """从初始分布抽取状态"""
        pass

    @abstractmethod
    def sample_transition(self, state, action, rng: np.random.Generator):
        """抽取下一状态"""
        pass

    @abstractmethod
    def cost(self, state, action) -> float:
        """单步代价 c(s, a) ∈ [0, c̄]"""
        pass

    def step(self, state, action, rng: np.random.Generator):
        """返回 (下一状态, 代价)"""
        return self.sample_transition(state, action, rng), self.cost(state, action)

    def embed(self, state) -> np.ndarray:
        """状态的特征向量"""
        return np.atleast_1d(np.asarray(state, dtype=float))

    def embed_afterstate(self, state, action) -> np.ndarray:
        """确定性转移下 (s, a) 的后继状态特征（有限动作的 afterstate 编码）"""
        raise NotImplementedError(f"{self.name} 不支持 afterstate 编码")

    def state_key(self, state) -> Optional[int]:
        """按状态取正则锚点时使用的下标（只有表格环境有）"""
        return None

    def is_absorbing(self, state) -> bool:
        return False

    def absorbing_value(self, state) -> float:
        """吸收态之后的精确剩余价值"""
        return 0.0

    def episode_score(self, costs: Sequence[float]) -> float:
        """环境原生得分，默认是折扣累计代价"""
        costs = np.asarray(costs, dtype=float)
        return float(np.sum(costs * self.gamma ** np.arange(len(costs))))

    @property
    def n_actions(self) -> Optional[int]:
        return self.action_set.dim if self.finite_actions else None

    @property
    def action_dim(self) -> int:
        return self.action_set.dim

    def __repr__(self) -> str:
        return f"{self.name}(config={self.config})"
