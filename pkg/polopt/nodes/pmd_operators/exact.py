"""
精确 PMD

π_{k+1}(s) = argmin_a ⟨Q_0^{π_k}(s), a⟩ + h^a(s) + (1/η_k) D(π_k(s), a)

每步都有精确的 Q，所有诊断（f、gap、𝒟、价值单调性、ψ 残差）都是精确值。
"""

from typing import Any, Dict, Optional

import numpy as np

from ..geometry_operators import BaseActionSet, BaseGeometryOperator, BaseRegularizer, SimplexSet, bregman_prox
from ..mdp_operators import OracleSolution, PolicyTable, TabularMdp, ValueFunctions, evaluate_exact
from ..strategies import PmdSchedule
from .base import BaseSolverOperator, SolverState, as_policy_table


def pmd_step_exact(
    mdp: TabularMdp,
    pi_k: PolicyTable,
    vals: ValueFunctions,
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    eta_k: float,
    action_set: Optional[BaseActionSet] = None,
) -> PolicyTable:
    """
    一步精确 PMD

    Args:
        mdp: 表格 MDP
        pi_k: 当前策略
        vals: π_k 的价值函数
        geom: Bregman 几何
        reg: 正则项
        eta_k: 步长（inf 表示策略迭代）
        action_set: 动作集合（默认单纯形）

    Returns:
        π_{k+1}
    """
    if not eta_k > 0:
        raise ValueError(f"步长 η_k 必须为正，实际为 {eta_k}")
    simplex = action_set or SimplexSet({"n_actions": mdp.n_actions})
    tau = 0.0 if np.isinf(eta_k) else 1.0 / eta_k
    rows = bregman_prox(geom, reg, simplex, vals.Q, 1.0, tau, pi_k.rows, np.arange(mdp.n_states))
    return as_policy_table(rows)


class ExactPmdOperator(BaseSolverOperator):
    """
    精确 PMD 运行

    Example:
        operator = ExactPmdOperator(mdp, geom, reg, PmdSchedule({"kind": "geometric", "gamma": 0.9}),
                                    oracle=oracle)
        trace = operator.run(150)
    """

    def __init__(
        self,
        mdp: TabularMdp,
        geom: BaseGeometryOperator,
        reg: BaseRegularizer,
        schedule: PmdSchedule,
        config: Dict[str, Any] = None,
        oracle: Optional[OracleSolution] = None,
        weighting: Optional[np.ndarray] = None,
        pi_0: Optional[PolicyTable] = None,
        verbose: bool = False,
    ):
        super().__init__(geom, reg, config, mdp, oracle, weighting, verbose)
        self.schedule = schedule
        self.pi_0 = pi_0 or PolicyTable.uniform(mdp.n_states, mdp.n_actions)
        self.trace.meta.update({"schedule": schedule.describe(), "mode": "exact"})

    def initialize(self) -> SolverState:
        vals = evaluate_exact(self.mdp, self.pi_0, self.reg)
        return SolverState(k=0, policy=self.pi_0, table=self.pi_0, vals=vals,
                           info=self.exact_metrics(self.pi_0, vals))

    def iterate(self, state: SolverState) -> SolverState:
        self._tic()
        k = state.k
        nxt = pmd_step_exact(self.mdp, state.table, state.vals, self.geom, self.reg, self.schedule.eta(k))
        vals_next = evaluate_exact(self.mdp, nxt, self.reg)
        info = self.exact_metrics(nxt, vals_next)
        info.update(self.residual_metrics(k, state.table, nxt, state.vals, vals_next))
        info["wall_ms"] = self._toc()
        return SolverState(k=k + 1, policy=nxt, table=nxt, vals=vals_next, info=info)
