"""
MDP 模块 (MDP Module)

三层架构设计：
- 顶层：MdpModule（表格 MDP 上的精确计算）
- 中层：策略评估 / 最优解 Oracle / 诊断
- 底层：Operators（线性求解、幂迭代、值迭代）

核心功能：
为收敛性检验提供精确的“真值”：V^π、Q_0^π、ψ^π、κ_s^π、ν*、f*

主要技术：
1. 精确策略评估
   - 稠密 LU / 稀疏 splu
   - 条件数预警

2. 性能差分与访问测度
   - performance_difference 恒等式
   - κ_s^π 线性求解

3. 最优解 Oracle
   - 带近端极小的值迭代 + 策略迭代精修
   - 平稳分布（幂迭代、懒惰链、阻尼）
"""

from typing import Any, Dict, Optional

import numpy as np

from .geometry import build_geometry, build_regularizer
from .mdp_operators import (
    OracleSolution,
    PolicyTable,
    TabularMdp,
    ValueFunctions,
    VisitationMeasure,
    advantage,
    advantage_table,
    bellman_residual,
    default_geometry,
    evaluate_exact,
    objective_f,
    performance_difference,
    policy_iteration_step,
    solve_oracle,
    stationarity_residual,
    stationary_distribution,
    value_iteration,
    visitation,
)


class MdpModule:
    """
    MDP 模块（顶层）

    使用方式：
    1. 传入表格 MDP 与正则项配置
    2. 求最优解 Oracle（一次计算后缓存）
    3. 对任意策略做精确评估

    Example:
        module = MdpModule(mdp, {"regularizer": {"kind": "kl_to_anchor", "weight": 0.1}})
        oracle = module.oracle()
        vals = module.evaluate(PolicyTable.uniform(mdp.n_states, mdp.n_actions))
    """

    def __init__(self, mdp: TabularMdp, config: Dict[str, Any] = None):
        """
        初始化 MDP 模块

        Args:
            mdp: 表格 MDP
            config: 配置字典（regularizer / geometry / weighting / tol）
        """
        self.mdp = mdp
        self.config = config or {}
        self.regularizer = build_regularizer(self.config.get("regularizer"), mdp.n_actions)
        geometry_config = self.config.get("geometry")
        self.geometry = (
            build_geometry(geometry_config, mdp.n_actions)
            if geometry_config
            else default_geometry(self.regularizer, mdp.n_actions)
        )
        self.tol = float(self.config.get("tol", 1e-10))
        self.verbose = bool(self.config.get("verbose", False))
        self._oracle: Optional[OracleSolution] = None

    def weighting(self) -> Optional[np.ndarray]:
        """目标函数的权重 ρ：nu_star（默认）、uniform 或显式向量"""
        weighting = self.config.get("weighting", "nu_star")
        if isinstance(weighting, str):
            if weighting == "uniform":
                return np.full(self.mdp.n_states, 1.0 / self.mdp.n_states)
            if weighting == "nu_star":
                return None
            print(f"⚠️  未知的权重: {weighting}，使用默认 nu_star")
            return None
        return np.asarray(weighting, dtype=float)

    def oracle(self) -> OracleSolution:
        """V*、π*、ν*、f*（缓存）"""
        if self._oracle is None:
            if self.verbose:
                print("🔧 计算最优解 Oracle...")
            self._oracle = solve_oracle(self.mdp, self.regularizer, self.weighting(), self.geometry, self.tol)
            if self.verbose:
                print(f"✅ f* = {self._oracle.f_star:.6f}")
        return self._oracle

    def evaluate(self, pi) -> ValueFunctions:
        return evaluate_exact(self.mdp, pi, self.regularizer)

    def advantage(self, vals: ValueFunctions, pi, s: int, a) -> float:
        return advantage(vals, self.regularizer, pi, s, a)

    def advantage_table(self, vals: ValueFunctions, pi, pi_next) -> np.ndarray:
        return advantage_table(vals, self.regularizer, pi, pi_next)

    def visitation(self, pi, start) -> VisitationMeasure:
        return visitation(self.mdp, pi, start)

    def performance_difference(self, pi, pi_prime, s) -> float:
        return performance_difference(self.mdp, pi, pi_prime, self.regularizer, s)

    def objective(self, pi, vals: Optional[ValueFunctions] = None) -> float:
        """f(π)，权重与 Oracle 一致"""
        return objective_f(self.mdp, pi, self.regularizer, self.oracle().nu, vals)

    def gap(self, pi, vals: Optional[ValueFunctions] = None) -> float:
        return self.objective(pi, vals) - self.oracle().f_star

    def distance_to_opt(self, pi) -> float:
        """𝒟(π, π*) = Σ_s ν(s) D(π(s), π*(s))"""
        oracle = self.oracle()
        rows = pi.rows if isinstance(pi, PolicyTable) else np.asarray(pi, dtype=float)
        return float(oracle.nu @ self.geometry.divergence(rows, oracle.policy.rows, clip=True))

    def stationary_distribution(self, pi) -> np.ndarray:
        return stationary_distribution(self.mdp, pi, verbose=self.verbose)

    def value_iteration(self):
        return value_iteration(self.mdp, self.regularizer, self.tol, self.geometry, verbose=self.verbose)

    def policy_iteration_step(self, pi) -> PolicyTable:
        return policy_iteration_step(self.mdp, pi, self.regularizer, self.geometry)

    def bellman_residual(self, V: np.ndarray) -> float:
        return bellman_residual(self.mdp, self.regularizer, V, self.geometry)

    def stationarity_residual(self, pi_k, pi_next, vals: ValueFunctions, probes=None):
        return stationarity_residual(pi_k, pi_next, self.geometry, self.regularizer, vals, probes)

    def summary(self) -> Dict[str, Any]:
        """
        返回模块摘要信息

        Returns:
            摘要字典
        """
        return {
            "module": "MdpModule",
            "n_states": self.mdp.n_states,
            "n_actions": self.mdp.n_actions,
            "gamma": self.mdp.gamma,
            "c_bar": self.mdp.c_bar,
            "sparse": self.mdp.is_sparse,
            "regularizer": self.regularizer.name,
            "geometry": self.geometry.name,
            "oracle_ready": self._oracle is not None,
        }


__all__ = [
    "MdpModule",
    "TabularMdp",
    "PolicyTable",
    "ValueFunctions",
    "VisitationMeasure",
    "evaluate_exact",
    "advantage",
    "visitation",
    "performance_difference",
    "stationary_distribution",
    "objective_f",
    "value_iteration",
    "policy_iteration_step",
    "stationarity_residual",
]
