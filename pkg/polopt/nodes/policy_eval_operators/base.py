"""
Policy Evaluation Operator 基类
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Sequence

import numpy as np


class BaseFeatureMap(ABC):
    """
    特征映射基类

    输入 z 由 encode(env, states, actions) 从 (状态, 动作) 构造，
    transform(Z) 返回 [n × n_features] 的特征矩阵。
    """

    kind: str = "base"

    def __init__(self, config: Dict[str, Any] = None):
        """
        初始化 operator

        Args:
            config: 配置字典
        """
        self.config = config or {}
        self.name = self.__class__.__name__

    @abstractmethod
    def encode(self, env, states: Sequence, actions: Sequence) -> np.ndarray:
        """把 (状态, 动作) 对编码成输入矩阵 Z"""
        pass

    @abstractmethod
    def transform(self, Z: np.ndarray) -> np.ndarray:
        """特征矩阵"""
        pass

    @property
    @abstractmethod
    def n_features(self) -> int:
        pass

    @property
    def is_fitted(self) -> bool:
        return True

    def fit(self, Z: np.ndarray) -> "BaseFeatureMap":
        """根据第一批数据确定锚点与带宽（无需拟合的映射直接返回）"""
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "config": dict(self.config)}

    def __repr__(self) -> str:
        return f"{self.name}(config={self.config})"
