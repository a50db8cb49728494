"""
Geometry Operator 基类

- BaseGeometryOperator: 距离生成函数 ω 与 Bregman 散度 D
- BaseRegularizer: 正则项 h^a(s)
- BaseActionSet: 动作集合及其投影
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np


class BaseGeometryOperator(ABC):
    """
    Bregman 几何基类

    约定 D(a_ref, a) = ω(a) − ω(a_ref) − ⟨∇ω(a_ref), a − a_ref⟩，
    第一个参数是参考点（求梯度的点）。
    """

    kind: str = "base"
    norm_order: float = 2

    def __init__(self, config: Dict[str, Any] = None):
        self.config = config or {}
        self.name = self.__class__.__name__
        self.action_dim = int(self.config.get("action_dim", 2))

    @abstractmethod
    def omega(self, a: np.ndarray) -> np.ndarray:
        """距离生成函数 ω(a)，按最后一维求值"""
        pass

    @abstractmethod
    def grad_omega(self, a: np.ndarray) -> np.ndarray:
        """∇ω(a)"""
        pass

    @abstractmethod
    def divergence(self, a_ref: np.ndarray, a: np.ndarray, clip: bool = False):
        """
        Bregman 散度 D(a_ref, a)

        Args:
            a_ref: 参考点
            a: 目标点
            clip: 为 True 时把参考点分量截断到 1e-300 而不是报错

        Returns:
            标量（一维输入）或按行的数组
        """
        pass

    def center(self) -> np.ndarray:
        """单纯形上 ∇ω 为常向量的点"""
        return np.full(self.action_dim, 1.0 / self.action_dim)

    def norm(self, x: np.ndarray) -> np.ndarray:
        """强凸性所对应的范数"""
        return np.linalg.norm(x, ord=self.norm_order, axis=-1)

    def _as_action(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.shape[-1] != self.action_dim:
            raise ValueError(f"动作维度应为 {self.action_dim}，实际为 {a.shape[-1]}")
        if not np.all(np.isfinite(a)):
            raise ValueError("动作包含非有限值")
        return a

    def __repr__(self) -> str:
        return f"{self.name}(config={self.config})"


class BaseRegularizer(ABC):
    """
    正则项基类

    Attributes:
        mu_h: 相对 D 的强凸模（弱凸时为负）
        lipschitz: Lipschitz 常数 M_h
        curvature: 关于 ½‖a − anchor‖² 的二次系数（欧氏闭式解使用）
    """

    kind: str = "base"
    mu_h: float = 0.0
    lipschitz: float = 0.0
    curvature: float = 0.0

    def __init__(self, config: Dict[str, Any] = None):
        self.config = config or {}
        self.name = self.__class__.__name__
        self.weight = float(self.config.get("weight", 0.0))
        self.anchor: Optional[np.ndarray] = None

    def anchor_at(self, state=None) -> Optional[np.ndarray]:
        """
        取状态 s 对应的锚点

        锚点可以是单个向量（对所有状态相同），也可以是按状态排列的矩阵。
        """
        if self.anchor is None or self.anchor.ndim == 1 or state is None:
            return self.anchor
        return self.anchor[state]

    @abstractmethod
    def value(self, a: np.ndarray, state=None) -> np.ndarray:
        """h^a(s)，按最后一维求值"""
        pass

    @abstractmethod
    def grad(self, a: np.ndarray, state=None) -> np.ndarray:
        """∇_a h^a(s)"""
        pass

    def upper_bound(self) -> float:
        """动作集上 h 的上界，用于确定 c̄"""
        return 0.0

    def __repr__(self) -> str:
        return f"{self.name}(config={self.config})"


class BaseActionSet(ABC):
    """动作集合基类"""

    kind: str = "base"
    finite: bool = False

    def __init__(self, config: Dict[str, Any] = None):
        self.config = config or {}
        self.name = self.__class__.__name__

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @abstractmethod
    def project(self, v: np.ndarray) -> np.ndarray:
        """欧氏投影"""
        pass

    @abstractmethod
    def contains(self, a: np.ndarray, tol: float = 1e-12) -> bool:
        pass

    @abstractmethod
    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        pass

    def __repr__(self) -> str:
        return f"{self.name}(config={self.config})"
