"""
有限动作的函数逼近 PDA

每次迭代拟合普通的 Q̃(·; θ_k)，在共享特征映射下把 β_k θ_k 累加到对偶累加器；
π_{k+1} 由累加器现算，支持 JSON 检查点与断点续跑。
"""

from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..geometry import bregman_diameter
from ..geometry_operators import BaseActionSet, BaseGeometryOperator, BaseRegularizer
from ..mdp_operators import OracleSolution, PolicyTable, TabularMdp, evaluate_exact
from ..pmd_operators import BaseSolverOperator, SolverState, UniformPolicy, as_policy_table
from ..policy_eval_operators import QModel
from ..strategies import PdaSchedule
from .accumulator import DualAccumulator, accumulator_policy
from .base import AccumulatorPolicy, pda_allowance, pda_div_scale


def pda_step_fa(
    acc: DualAccumulator,
    model_k: QModel,
    schedule: PdaSchedule,
    k: int,
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    s,
    action_set: Optional[BaseActionSet] = None,
) -> np.ndarray:
    """
    单个状态上的 π_{k+1}(s)：把 β_k θ_k 累加到 acc 后求解

    Args:
        acc: 截至 k−1 的累加器
        model_k: π_k 的拟合模型（与累加器共享特征映射）
        schedule: PDA 步长策略
        k: 迭代下标
        geom / reg: 几何与正则项
        s: 环境状态
        action_set: 动作集合（默认取环境的）

    Returns:
        动作
    """
    env = model_k.env
    acc = acc.add(schedule.beta(k), theta=model_k.theta, lam=schedule.lam(k), mu=schedule.mu(k))
    return accumulator_policy(acc, geom, reg, action_set or env.action_set, s, env)


class FiniteFaPdaOperator(BaseSolverOperator):
    """
    有限动作函数逼近 PDA 运行

    config:
        diagnose_every / score: 同 FiniteFaPmdOperator
        checkpoint: 每次迭代后写累加器检查点的路径
        resume_from: 从检查点继续
    """

    def __init__(
        self,
        env,
        evaluator,
        geom: BaseGeometryOperator,
        reg: BaseRegularizer,
        schedule: PdaSchedule,
        config: Dict[str, Any] = None,
        mdp: Optional[TabularMdp] = None,
        oracle: Optional[OracleSolution] = None,
        weighting: Optional[np.ndarray] = None,
        rng: Optional[np.random.Generator] = None,
        score_rng: Optional[np.random.Generator] = None,
        verbose: bool = False,
    ):
        super().__init__(geom, reg, config, mdp, oracle, weighting, verbose)
        if not env.finite_actions:
            raise ValueError("FiniteFaPdaOperator 只支持有限动作环境")
        self.env = env
        self.evaluator = evaluator
        self.schedule = schedule
        self.rng = rng or np.random.default_rng(0)
        self.score_rng = score_rng or np.random.default_rng(1)
        self.diagnose_every = int(self.config.get("diagnose_every", 0))
        self.score = bool(self.config.get("score", True))
        self.checkpoint = self.config.get("checkpoint")
        self.resume_from = self.config.get("resume_from")
        self._states = None if mdp is None else [evaluator.env_state(i) for i in range(mdp.n_states)]
        self.diameter = bregman_diameter(geom, env.action_set, np.full(env.n_actions, 1.0 / env.n_actions))
        self.trace.meta.update({"schedule": schedule.describe(), "mode": "finite_fa", "algorithm": "pda"})

    def _metrics(self, policy, table: Optional[PolicyTable], vals, bootstrap=None) -> Dict[str, float]:
        info: Dict[str, float] = {}
        if table is not None:
            info.update(self.exact_metrics(table, vals))
        if self.score:
            scored = self.score_metrics(self.evaluator, policy, self.score_rng, bootstrap)
            f_hat = scored.pop("f")
            info.update(scored)
            info.setdefault("f", f_hat)
        return info

    def _tabulate(self, policy):
        if self.mdp is None:
            return None, None
        if isinstance(policy, UniformPolicy):
            table = PolicyTable.uniform(self.mdp.n_states, self.mdp.n_actions)
        else:
            table = as_policy_table(policy.table(self._states))
        return table, evaluate_exact(self.mdp, table, self.reg)

    def initialize(self) -> SolverState:
        if self.resume_from:
            acc = DualAccumulator.load(self.resume_from)
            self.evaluator.feature_map = acc.feature_map
            policy = AccumulatorPolicy(acc, self.geom, self.reg, self.env)
            k = acc.n_terms
            if self.verbose:
                print(f"📂 从检查点 {self.resume_from} 继续，k = {k}")
        else:
            row = np.full(self.env.n_actions, 1.0 / self.env.n_actions)
            acc = DualAccumulator(anchor=row, feature_map=self.evaluator.feature_map)
            policy = UniformPolicy(self.env.n_actions)
            k = 0
        table, vals = self._tabulate(policy)
        return SolverState(k=k, policy=policy, table=table, vals=vals, accumulator=acc,
                           info=self._metrics(policy, table, vals))

    def iterate(self, state: SolverState) -> SolverState:
        self._tic()
        k = state.k
        dataset = self.evaluator.collect(state.policy, self.rng, state.table, state.value_estimate)
        model = self.evaluator.fit(dataset)
        acc = state.accumulator.add(self.schedule.beta(k), theta=model.theta,
                                    lam=self.schedule.lam(k), mu=self.schedule.mu(k))
        nxt = AccumulatorPolicy(acc, self.geom, self.reg, self.env)
        table, vals = self._tabulate(nxt)

        previous = state.policy

        def value_estimate(s) -> float:
            return float(model.q0(s) @ previous(s))

        info = self._metrics(nxt, table, vals, value_estimate)
        info["env_steps"] = dataset.env_steps
        if table is not None:
            info.update(self.residual_metrics(
                k, state.table, table, state.vals, vals,
                psi_weight=self.schedule.beta(k),
                allowance=pda_allowance(self.schedule, k, self.env.gamma, self.diameter),
                div_scale=pda_div_scale(self.schedule, k),
            ))
            if self.diagnose_every and k % self.diagnose_every == 0:
                report = self.evaluator.diagnose(state.policy, state.table, self.score_rng,
                                                 self.weighting, state.value_estimate)
                info.update(varsigma_hat=report.det_error, sigma2_hat=report.sto_error,
                            app_error=report.app_error, bia_error=report.bia_error)
        if self.checkpoint:
            acc.save(Path(self.checkpoint), extra={"schedule": self.schedule.describe()})
        info["wall_ms"] = self._toc()

        return SolverState(k=k + 1, policy=nxt, table=table, vals=vals, model=model, accumulator=acc,
                           value_estimate=value_estimate, info=info)
