"""
精确策略评估 Operators

1. evaluate_exact: (I − γP^π)V = c^π + h^π 的直接线性求解
2. advantage / advantage_table: ψ^π(s, a)
3. visitation: 折扣访问测度 κ_s^π
4. performance_difference: V^{π'}(s) − V^π(s) 的访问测度表示
5. stationary_distribution: 幂迭代求 P^π 的平稳分布
6. objective_f: 加权目标 Σ_s ρ(s) V^π(s)
"""

from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import splu

from ..errors import StationaryDistributionError
from ..geometry_operators import BaseRegularizer
from .tabular import PolicyTable, TabularMdp, ValueFunctions, VisitationMeasure

DENSE_STATE_CAP = 10_000
CONDITION_WARN = 1e12


def _rows(pi) -> np.ndarray:
    return pi.rows if isinstance(pi, PolicyTable) else np.asarray(pi, dtype=float)


def _solve(mdp: TabularMdp, rows: np.ndarray, rhs: np.ndarray, transpose: bool = False) -> np.ndarray:
    """求解 (I − γP^π)x = rhs 或其转置"""
    n = mdp.n_states
    P = mdp.policy_kernel(rows)
    if mdp.is_sparse:
        M = sp.identity(n, format="csc") - mdp.gamma * P.tocsc()
        if transpose:
            M = M.T.tocsc()
        return splu(M).solve(rhs)
    if n > DENSE_STATE_CAP:
        raise ValueError(f"稠密线性求解最多支持 {DENSE_STATE_CAP} 个状态，请使用稀疏转移核")
    M = np.eye(n) - mdp.gamma * P
    return lu_solve(lu_factor(M.T if transpose else M), rhs)


def policy_cost(mdp: TabularMdp, pi, reg: BaseRegularizer):
    """返回 (c^π + h^π, h^π)"""
    rows = _rows(pi)
    h_pi = np.asarray(reg.value(rows, np.arange(mdp.n_states)), dtype=float)
    return np.sum(rows * mdp.cost, axis=1) + h_pi, h_pi


def evaluate_exact(mdp: TabularMdp, pi, reg: BaseRegularizer) -> ValueFunctions:
    """
    精确策略评估

    Args:
        mdp: 表格 MDP
        pi: 策略
        reg: 正则项

    Returns:
        ValueFunctions（V 与 Q_0）
    """
    rows = _rows(pi)
    if (1.0 + mdp.gamma) / (1.0 - mdp.gamma) > CONDITION_WARN:
        print(f"⚠️  γ = {mdp.gamma} 过于接近 1，线性系统条件数可能超过 {CONDITION_WARN:.0e}")

    c_pi, h_pi = policy_cost(mdp, rows, reg)
    V = _solve(mdp, rows, c_pi)

    P = mdp.policy_kernel(rows)
    residual = float(np.max(np.abs(V - mdp.gamma * (P @ V) - c_pi)))
    if residual > 1e-10 * max(1.0, float(np.max(np.abs(c_pi)))):
        print(f"⚠️  策略评估残差偏大: {residual:.3e}")

    Q = mdp.cost + h_pi[:, None] + mdp.gamma * mdp.expected_next(V)
    return ValueFunctions(V=V, Q=Q, h_pi=h_pi, residual=residual)


def advantage(vals: ValueFunctions, reg: BaseRegularizer, pi, s: int, a: np.ndarray) -> float:
    """
    ψ^π(s, a) = ⟨Q_0(s), a − π(s)⟩ + h^a(s) − h^{π(s)}(s)

    a = π(s) 时差值为零向量，结果恰为 0。
    """
    pi_s = _rows(pi)[s]
    a = np.asarray(a, dtype=float)
    return float(vals.Q[s] @ (a - pi_s) + reg.value(a, s) - reg.value(pi_s, s))


def advantage_table(vals: ValueFunctions, reg: BaseRegularizer, pi, pi_next) -> np.ndarray:
    """按状态计算 ψ^π(s, π'(s))"""
    rows, rows_next = _rows(pi), _rows(pi_next)
    states = np.arange(rows.shape[0])
    return (
        np.sum(vals.Q * (rows_next - rows), axis=1)
        + reg.value(rows_next, states)
        - reg.value(rows, states)
    )


def visitation(mdp: TabularMdp, pi, start: Union[int, np.ndarray]) -> VisitationMeasure:
    """
    折扣访问测度

    Args:
        mdp: 表格 MDP
        pi: 策略
        start: 起始状态下标或起始分布

    Returns:
        VisitationMeasure
    """
    if np.ndim(start) == 0:
        e = np.zeros(mdp.n_states)
        e[int(start)] = 1.0
    else:
        e = np.asarray(start, dtype=float)
    kappa = (1.0 - mdp.gamma) * _solve(mdp, _rows(pi), e, transpose=True)
    return VisitationMeasure(kappa=kappa, start=start)


def performance_difference(
    mdp: TabularMdp,
    pi,
    pi_prime,
    reg: BaseRegularizer,
    s: Union[int, np.ndarray],
    vals: Optional[ValueFunctions] = None,
) -> float:
    """
    (1/(1−γ)) Σ_q κ_s^{π'}(q) ψ^π(q, π'(q))，等于 V^{π'}(s) − V^π(s)
    """
    if vals is None:
        vals = evaluate_exact(mdp, pi, reg)
    psi = advantage_table(vals, reg, pi, pi_prime)
    kappa = visitation(mdp, pi_prime, s).kappa
    return float(kappa @ psi / (1.0 - mdp.gamma))


def objective_f(mdp: TabularMdp, pi, reg: BaseRegularizer, weighting: np.ndarray,
                vals: Optional[ValueFunctions] = None) -> float:
    """f(π) = Σ_s ρ(s) V^π(s)"""
    if vals is None:
        vals = evaluate_exact(mdp, pi, reg)
    return float(np.asarray(weighting, dtype=float) @ vals.V)


def _power_iteration(step, nu: np.ndarray, tol: float, budget: int):
    for _ in range(budget):
        nxt = step(nu)
        nxt = nxt / nxt.sum()
        if np.sum(np.abs(nxt - nu)) < tol:
            return nxt, True
        nu = nxt
    return nu, False


def stationary_distribution(
    mdp: TabularMdp,
    pi,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
    plain_budget: int = 100_000,
    damping: float = 1e-6,
    verbose: bool = False,
) -> np.ndarray:
    """
    P^π 的平稳分布 ν（νᵀP^π = νᵀ，Σν = 1）

    先做普通幂迭代；不收敛（周期链）时改用懒惰链 ½(I + P^π)，平稳分布不变；
    仍不收敛（可约链）时再混入 1e-6 的均匀分布。

    Raises:
        StationaryDistributionError: 超过 max_iter 次仍未收敛
    """
    P = mdp.policy_kernel(_rows(pi))
    PT = P.T.tocsr() if sp.issparse(P) else P.T
    n = mdp.n_states
    nu0 = np.full(n, 1.0 / n)

    nu, done = _power_iteration(lambda v: PT @ v, nu0, tol, min(plain_budget, max_iter))
    if done:
        return nu

    remaining = max_iter - min(plain_budget, max_iter)
    if verbose:
        print("⚠️  幂迭代未收敛，改用懒惰链")
    nu, done = _power_iteration(lambda v: 0.5 * (v + PT @ v), nu, tol, remaining // 2)
    if done:
        return nu

    print(f"⚠️  平稳分布加入 {damping:.0e} 均匀阻尼")
    nu, done = _power_iteration(
        lambda v: (1.0 - damping) * 0.5 * (v + PT @ v) + damping / n, nu, tol, remaining - remaining // 2
    )
    if done:
        return nu
    raise StationaryDistributionError(f"幂迭代 {max_iter} 次后未收敛")
