"""
最优解 Oracle Operators

1. value_iteration: 带近端极小的 Bellman 迭代，再用策略迭代精修
2. policy_iteration_step: 逐状态极小化优势函数
3. solve_oracle: 打包 V*、π*、ν*、f*
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..geometry_operators import (
    BaseGeometryOperator,
    BaseRegularizer,
    EntropyGeometry,
    EuclideanGeometry,
    SimplexSet,
    bregman_prox,
)
from .evaluation import evaluate_exact, stationary_distribution
from .tabular import PolicyTable, TabularMdp, ValueFunctions


class ValueIterationResult(NamedTuple):
    V: np.ndarray
    policy: PolicyTable


@dataclass(frozen=True, eq=False)
class OracleSolution:
    """
    最优解

    Attributes:
        V: V*
        policy: π*
        nu: 目标加权（默认是 π* 的平稳分布 ν*）
        f_star: f* = Σ ν(s) V*(s)
        vals: π* 的价值函数
    """

    V: np.ndarray
    policy: PolicyTable
    nu: np.ndarray
    f_star: float
    vals: ValueFunctions


def default_geometry(reg: BaseRegularizer, n_actions: int) -> BaseGeometryOperator:
    """正则项没有指定几何时使用的几何：二次类用欧氏，其余用熵"""
    if reg.kind in ("quadratic", "concave_quadratic"):
        return EuclideanGeometry({"action_dim": n_actions})
    return EntropyGeometry({"action_dim": n_actions})


def minimize_over_actions(
    mdp: TabularMdp,
    g: np.ndarray,
    reg: BaseRegularizer,
    geom: Optional[BaseGeometryOperator] = None,
) -> np.ndarray:
    """逐状态求 argmin_a ⟨g(s), a⟩ + h^a(s)（τ = 0 的近端映射）"""
    if reg.mu_h < 0:
        # 凹目标在单纯形上的极小值在顶点处取到
        states = np.arange(mdp.n_states)
        vertices = np.eye(mdp.n_actions)
        scores = g + np.stack([reg.value(np.tile(v, (mdp.n_states, 1)), states) for v in vertices], axis=1)
        return vertices[np.argmin(scores, axis=1)]
    geom = geom or default_geometry(reg, mdp.n_actions)
    simplex = SimplexSet({"n_actions": mdp.n_actions})
    return bregman_prox(geom, reg, simplex, g, 1.0, 0.0, None, np.arange(mdp.n_states))


def bellman_operator(mdp: TabularMdp, reg: BaseRegularizer, V: np.ndarray,
                     geom: Optional[BaseGeometryOperator] = None):
    """返回 (TV, 极小点)"""
    g = mdp.cost + mdp.gamma * mdp.expected_next(V)
    rows = minimize_over_actions(mdp, g, reg, geom)
    TV = np.sum(g * rows, axis=1) + reg.value(rows, np.arange(mdp.n_states))
    return TV, rows


def bellman_residual(mdp: TabularMdp, reg: BaseRegularizer, V: np.ndarray,
                     geom: Optional[BaseGeometryOperator] = None) -> float:
    """‖TV − V‖_∞"""
    TV, _ = bellman_operator(mdp, reg, V, geom)
    return float(np.max(np.abs(TV - V)))


def policy_iteration_step(
    mdp: TabularMdp,
    pi: PolicyTable,
    reg: BaseRegularizer,
    geom: Optional[BaseGeometryOperator] = None,
    vals: Optional[ValueFunctions] = None,
) -> PolicyTable:
    """
    π_{k+1}(s) = argmin_a ψ^{π_k}(s, a)

    Null 正则时是贪心顶点（平局取最小下标）；强凸正则时是 η → ∞ 的近端映射。
    """
    if vals is None:
        vals = evaluate_exact(mdp, pi, reg)
    g = vals.Q - vals.h_pi[:, None]
    return PolicyTable(minimize_over_actions(mdp, g, reg, geom))


def value_iteration(
    mdp: TabularMdp,
    reg: BaseRegularizer,
    tol: float = 1e-10,
    geom: Optional[BaseGeometryOperator] = None,
    max_iter: int = 1_000_000,
    polish: bool = True,
    verbose: bool = False,
) -> ValueIterationResult:
    """
    值迭代

    Args:
        mdp: 表格 MDP
        reg: 正则项（非 Null 时逐状态用近端映射求极小）
        tol: Bellman 残差阈值
        geom: 近端映射使用的几何
        max_iter: 最大迭代次数
        polish: 是否用策略迭代精修（Null 正则下得到精确的 π*）
        verbose: 是否打印详细信息

    Returns:
        (V*, π*)
    """
    V = np.zeros(mdp.n_states)
    rows = None
    for it in range(max_iter):
        TV, rows = bellman_operator(mdp, reg, V, geom)
        gap = float(np.max(np.abs(TV - V)))
        V = TV
        if gap <= tol:
            break
    if verbose:
        print(f"🔄 值迭代完成: {it + 1} 次迭代，残差 {gap:.3e}")

    policy = PolicyTable(rows)
    if polish:
        vals = evaluate_exact(mdp, policy, reg)
        for _ in range(1000):
            nxt = policy_iteration_step(mdp, policy, reg, geom, vals)
            nxt_vals = evaluate_exact(mdp, nxt, reg)
            change = float(np.max(np.abs(nxt_vals.V - vals.V)))
            stable = np.array_equal(nxt.rows, policy.rows)
            policy, vals = nxt, nxt_vals
            if stable or change <= tol * (1.0 - mdp.gamma):
                break
        V = vals.V
        if verbose:
            print(f"✅ 策略迭代精修完成，Bellman 残差 {bellman_residual(mdp, reg, V, geom):.3e}")
    return ValueIterationResult(V=V, policy=policy)


def solve_oracle(
    mdp: TabularMdp,
    reg: BaseRegularizer,
    weighting: Optional[np.ndarray] = None,
    geom: Optional[BaseGeometryOperator] = None,
    tol: float = 1e-10,
) -> OracleSolution:
    """
    计算 V*、π*、ν*、f*

    weighting 为空时使用 π* 的平稳分布 ν*。
    """
    V, policy = value_iteration(mdp, reg, tol=tol, geom=geom)
    vals = evaluate_exact(mdp, policy, reg)
    nu = stationary_distribution(mdp, policy) if weighting is None else np.asarray(weighting, dtype=float)
    return OracleSolution(V=vals.V, policy=policy, nu=nu, f_star=float(nu @ vals.V), vals=vals)
