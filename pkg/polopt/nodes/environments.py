"""
环境模块 (Environment Module)

三层架构设计：
- 顶层：EnvironmentModule（环境模块）
- 中层：表格环境与连续环境两类
- 底层：Operators（具体环境）

核心功能：
根据实验配置构建环境；表格环境同时提供精确的 TabularMdp 与目标函数权重

主要技术：
1. 表格环境
   - random_tabular: Dirichlet 转移 + 均匀混合
   - tabular_json: 从 JSON 读取
   - gridworld: 带陷阱的 10×10 网格，稀疏导出 10⁴ 个状态

2. 连续环境
   - lqr: 离散 Riccati 方程给出基准反馈
   - pendulum: 简化的常微分方程倒立摆
"""

from typing import Any, Dict, Optional

import numpy as np

from .environment_operators import (
    BaseEnvironment,
    GridWorldEnvironment,
    LqrEnvironment,
    PendulumEnvironment,
    TabularEnvironment,
    gridworld_to_tabular,
    random_tabular,
    riccati_feedback,
)
from .mdp_operators import TabularMdp


class EnvironmentModule:
    """
    环境模块（顶层）

    Example:
        config = {"kind": "random_tabular", "n_states": 10, "n_actions": 3, "gamma": 0.9, "seed": 0}

        environments = EnvironmentModule(config)
        env = environments.env
        mdp = environments.tabular()
    """

    TABULAR_KINDS = ("random_tabular", "tabular_json", "gridworld")

    def __init__(self, config: Dict[str, Any] = None, verbose: bool = False):
        """
        初始化环境模块

        Args:
            config: 环境配置
            verbose: 是否打印详细信息
        """
        self.config = config or {}
        self.kind = str(self.config.get("kind", "random_tabular")).lower()
        self.verbose = verbose
        self._mdp: Optional[TabularMdp] = None
        self.env = self._init_environment()

    def _init_environment(self) -> BaseEnvironment:
        """根据 kind 初始化环境"""
        kind = self.kind

        if kind == "random_tabular":
            self._mdp = random_tabular(
                int(self.config.get("n_states", 10)),
                int(self.config.get("n_actions", 3)),
                float(self.config.get("gamma", 0.9)),
                float(self.config.get("sparsity", 0.0)),
                int(self.config.get("seed", 0)),
            )
            return TabularEnvironment(self._mdp, self.config)
        elif kind == "tabular_json":
            self._mdp = TabularMdp.from_json(self.config["path"])
            return TabularEnvironment(self._mdp, self.config, self._meta_weighting())
        elif kind == "gridworld":
            return GridWorldEnvironment(self.config)
        elif kind == "lqr":
            return LqrEnvironment(self.config)
        elif kind == "pendulum":
            return PendulumEnvironment(self.config)
        else:
            print(f"⚠️  未知的环境: {kind}，使用默认 random_tabular")
            self.kind = "random_tabular"
            return self._init_environment()

    def _meta_weighting(self) -> Optional[np.ndarray]:
        weighting = self._mdp.meta.get("weighting") if self._mdp is not None else None
        return None if weighting is None else np.asarray(weighting, dtype=float)

    @property
    def is_tabular(self) -> bool:
        return self.kind in self.TABULAR_KINDS

    def tabular(self) -> Optional[TabularMdp]:
        """精确的表格 MDP（连续环境返回 None）"""
        if self._mdp is None and self.kind == "gridworld":
            if self.verbose:
                print("🔧 导出网格世界的表格 MDP...")
            self._mdp = gridworld_to_tabular(self.env)
        return self._mdp

    def weighting(self) -> Optional[np.ndarray]:
        """精确目标的权重：网格世界用重置分布，其他表格环境默认 ν*"""
        if self.kind == "gridworld":
            return self.env.reset_distribution()
        return self._meta_weighting()

    def to_state_index(self, state) -> int:
        """环境状态到表格状态编号的映射"""
        if self.kind == "gridworld":
            return self.env.state_index(state)
        return int(state)

    def baseline_feedback(self) -> Optional[np.ndarray]:
        """LQR 的 Riccati 反馈增益"""
        return riccati_feedback(self.env.spec) if self.kind == "lqr" else None

    def summary(self) -> Dict[str, Any]:
        """
        返回模块摘要信息

        Returns:
            摘要字典
        """
        return {
            "module": "EnvironmentModule",
            "kind": self.kind,
            "environment": self.env.name,
            "gamma": self.env.gamma,
            "c_bar": self.env.c_bar,
            "finite_actions": self.env.finite_actions,
            "action_dim": self.env.action_dim,
        }


__all__ = ["EnvironmentModule", "random_tabular", "gridworld_to_tabular", "riccati_feedback"]
