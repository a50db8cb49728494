"""
有限动作的函数逼近 PMD

每次迭代在新的数据集上拟合增广值函数 L̃ = Q̃ − ⟨∇̃ω(s), a⟩，其中 ∇̃ω(s) ≈ ∇ω(π_k(s))/η_k；
π_{k+1} 不显式存储，需要时由 θ_k 现算：

    π_{k+1}(s) = argmin_{a∈Δ} ⟨L̃_0(s; θ_k), a⟩ + h^a(s) + (1/η_k) ω(a)
"""

from threading import Lock
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..geometry_operators import BaseActionSet, BaseGeometryOperator, BaseRegularizer, omega_prox
from ..mdp_operators import OracleSolution, PolicyTable, TabularMdp, evaluate_exact
from ..policy_eval_operators import QModel
from ..strategies import PmdSchedule
from .base import BaseSolverOperator, SolverState, as_policy_table


def pmd_step_finite_fa(
    model: QModel,
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    eta_k: float,
    s,
    action_set: Optional[BaseActionSet] = None,
) -> np.ndarray:
    """
    单个状态上的 π_{k+1}(s)

    Args:
        model: target_kind = "augmented_l" 的模型
        geom: Bregman 几何
        reg: 正则项
        eta_k: 步长
        s: 环境状态
        action_set: 动作集合（默认取环境的单纯形）

    Returns:
        单纯形上的点
    """
    env = model.env
    return omega_prox(geom, reg, action_set or env.action_set, model.l0(s), 1.0 / eta_k, env.state_key(s))


class UniformPolicy:
    """有限动作上的均匀策略 π_0"""

    def __init__(self, n_actions: int):
        self.row = np.full(n_actions, 1.0 / n_actions)

    def __call__(self, s) -> np.ndarray:
        return self.row

    def table(self, states: Sequence) -> np.ndarray:
        return np.tile(self.row, (len(states), 1))


class AugmentedModelPolicy:
    """
    由 (θ_k, η_k) 隐式定义的 π_{k+1}

    按状态下标缓存结果；批量计算 table 后缓存会被整体填充。
    """

    def __init__(self, model: QModel, geom: BaseGeometryOperator, reg: BaseRegularizer, eta: float):
        self.model = model
        self.geom = geom
        self.reg = reg
        self.eta = float(eta)
        self._cache: Dict[Any, np.ndarray] = {}
        self._lock = Lock()

    def __call__(self, s) -> np.ndarray:
        key = self.model.env.state_key(s)
        if key is not None and key in self._cache:
            return self._cache[key]
        row = pmd_step_finite_fa(self.model, self.geom, self.reg, self.eta, s)
        if key is not None:
            with self._lock:
                self._cache[key] = row
        return row

    def table(self, states: Sequence) -> np.ndarray:
        env = self.model.env
        logits = self.model.q0_table(states) - self.model.omega_table(states)
        keys = [env.state_key(s) for s in states]
        state_arg = np.asarray(keys) if keys and keys[0] is not None else None
        rows = omega_prox(self.geom, self.reg, env.action_set, logits, 1.0 / self.eta, state_arg)
        rows = np.clip(rows, 0.0, None)
        rows = rows / rows.sum(axis=1, keepdims=True)
        if state_arg is not None:
            with self._lock:
                self._cache.update(zip(keys, rows))
        return rows


class FiniteFaPmdOperator(BaseSolverOperator):
    """
    有限动作函数逼近 PMD 运行

    有精确 MDP 时记录精确的 f、gap、𝒟 与 ψ 残差，每 diagnose_every 次迭代做一次误差诊断；
    没有时 f 由 Monte Carlo 回合估计。
    """

    def __init__(
        self,
        env,
        evaluator,
        geom: BaseGeometryOperator,
        reg: BaseRegularizer,
        schedule: PmdSchedule,
        config: Dict[str, Any] = None,
        mdp: Optional[TabularMdp] = None,
        oracle: Optional[OracleSolution] = None,
        weighting: Optional[np.ndarray] = None,
        rng: Optional[np.random.Generator] = None,
        score_rng: Optional[np.random.Generator] = None,
        verbose: bool = False,
    ):
        """
        Args:
            env: 有限动作环境
            evaluator: PolicyEvalModule
            geom / reg: 几何与正则项
            schedule: 步长策略
            config: 配置（diagnose_every / score / record_timing / ...）
            mdp / oracle / weighting: 精确诊断所需
            rng: 采样流
            score_rng: 打分与诊断流
        """
        super().__init__(geom, reg, config, mdp, oracle, weighting, verbose)
        if not env.finite_actions:
            raise ValueError("FiniteFaPmdOperator 只支持有限动作环境")
        self.env = env
        self.evaluator = evaluator
        self.schedule = schedule
        self.rng = rng or np.random.default_rng(0)
        self.score_rng = score_rng or np.random.default_rng(1)
        self.diagnose_every = int(self.config.get("diagnose_every", 0))
        self.score = bool(self.config.get("score", True))
        self._states = None if mdp is None else [evaluator.env_state(i) for i in range(mdp.n_states)]
        self.trace.meta.update({"schedule": schedule.describe(), "mode": "finite_fa"})

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

    def initialize(self) -> SolverState:
        policy = UniformPolicy(self.env.n_actions)
        table = vals = None
        if self.mdp is not None:
            table = PolicyTable.uniform(self.mdp.n_states, self.mdp.n_actions)
            vals = evaluate_exact(self.mdp, table, self.reg)
        return SolverState(k=0, policy=policy, table=table, vals=vals, info=self._metrics(policy, table, vals))

    def iterate(self, state: SolverState) -> SolverState:
        self._tic()
        k = state.k
        eta = self.schedule.eta(k)
        dataset = self.evaluator.collect(state.policy, self.rng, state.table, state.value_estimate)
        model = self.evaluator.fit_augmented(dataset, state.policy, self.geom, eta)
        nxt = AugmentedModelPolicy(model, self.geom, self.reg, eta)

        table = vals = None
        if self.mdp is not None:
            table = as_policy_table(nxt.table(self._states))
            vals = evaluate_exact(self.mdp, table, self.reg)

        previous = state.policy

        def value_estimate(s) -> float:
            return float(model.q0(s) @ previous(s))

        info = self._metrics(nxt, table, vals, value_estimate)
        info["env_steps"] = dataset.env_steps
        if table is not None:
            info.update(self.residual_metrics(k, state.table, table, state.vals, vals))
            if self.diagnose_every and k % self.diagnose_every == 0:
                report = self.evaluator.diagnose(state.policy, state.table, self.score_rng,
                                                 self.weighting, state.value_estimate)
                info.update(varsigma_hat=report.det_error, sigma2_hat=report.sto_error,
                            app_error=report.app_error, bia_error=report.bia_error)
        info["wall_ms"] = self._toc()

        return SolverState(k=k + 1, policy=nxt, table=table, vals=vals, model=model,
                           value_estimate=value_estimate, info=info)
