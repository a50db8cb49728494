"""
精确 PDA

π_{k+1}(s) = argmin_a ⟨Σ_{t≤k} β_t Q_0^{π_t}(s), a⟩ + (Σ_{t≤k} β_t) h^a(s) + λ_k D(π_0(s), a)
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..geometry import bregman_diameter
from ..geometry_operators import BaseGeometryOperator, BaseRegularizer, SimplexSet, bregman_prox
from ..mdp_operators import OracleSolution, PolicyTable, TabularMdp, ValueFunctions, evaluate_exact
from ..pmd_operators import BaseSolverOperator, SolverState, as_policy_table
from ..strategies import PdaSchedule
from .accumulator import DualAccumulator
from .base import clamped_anchor, pda_allowance, pda_div_scale


def pda_step_exact(
    mdp: TabularMdp,
    acc: DualAccumulator,
    vals_k: ValueFunctions,
    schedule: PdaSchedule,
    k: int,
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
) -> Tuple[DualAccumulator, PolicyTable]:
    """
    一步精确 PDA

    Args:
        mdp: 表格 MDP
        acc: 截至 k−1 的累加器（anchor 为 π_0）
        vals_k: π_k 的价值函数
        schedule: PDA 步长策略
        k: 迭代下标
        geom: Bregman 几何
        reg: 正则项

    Returns:
        (累加 β_k Q_0^{π_k} 后的累加器, π_{k+1})
    """
    acc = acc.add(schedule.beta(k), q=vals_k.Q, lam=schedule.lam(k), mu=schedule.mu(k))
    simplex = SimplexSet({"n_actions": mdp.n_actions})
    rows = bregman_prox(geom, reg, simplex, acc.q_sum, acc.beta_sum, acc.lam, acc.anchor,
                        np.arange(mdp.n_states))
    return acc, as_policy_table(rows)


class ExactPdaOperator(BaseSolverOperator):
    """
    精确 PDA 运行

    max_value_increase 扣除了 λ 增长带来的允许量；−ψ 按 β_k 加权。
    """

    def __init__(
        self,
        mdp: TabularMdp,
        geom: BaseGeometryOperator,
        reg: BaseRegularizer,
        schedule: PdaSchedule,
        config: Dict[str, Any] = None,
        oracle: Optional[OracleSolution] = None,
        weighting: Optional[np.ndarray] = None,
        pi_0: Optional[PolicyTable] = None,
        verbose: bool = False,
    ):
        super().__init__(geom, reg, config, mdp, oracle, weighting, verbose)
        self.schedule = schedule
        self.pi_0 = pi_0 or PolicyTable.uniform(mdp.n_states, mdp.n_actions)
        self.diameter = bregman_diameter(geom, SimplexSet({"n_actions": mdp.n_actions}),
                                         clamped_anchor(self.pi_0.rows))
        self.trace.meta.update({"schedule": schedule.describe(), "mode": "exact", "algorithm": "pda"})

    def initialize(self) -> SolverState:
        vals = evaluate_exact(self.mdp, self.pi_0, self.reg)
        acc = DualAccumulator(anchor=self.pi_0.rows.copy())
        return SolverState(k=0, policy=self.pi_0, table=self.pi_0, vals=vals, accumulator=acc,
                           info=self.exact_metrics(self.pi_0, vals))

    def iterate(self, state: SolverState) -> SolverState:
        self._tic()
        k = state.k
        acc, nxt = pda_step_exact(self.mdp, state.accumulator, state.vals, self.schedule, k, self.geom, self.reg)
        vals_next = evaluate_exact(self.mdp, nxt, self.reg)
        info = self.exact_metrics(nxt, vals_next)
        info.update(self.residual_metrics(
            k, state.table, nxt, state.vals, vals_next,
            psi_weight=self.schedule.beta(k),
            allowance=pda_allowance(self.schedule, k, self.mdp.gamma, self.diameter),
            div_scale=pda_div_scale(self.schedule, k),
        ))
        info["wall_ms"] = self._toc()
        return SolverState(k=k + 1, policy=nxt, table=nxt, vals=vals_next, accumulator=acc, info=info)
