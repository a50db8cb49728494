"""
连续动作的函数逼近 PDA

数据由带探索噪声的行为策略采集：a = Proj_A(π_k(s) + ξ)，ξ ~ N(0, (scale/√t) I)。
π_{k+1}(s) 为 Σβ_t Q̃_t(s, a) + (Σβ_t) h^a(s) + λ_k D(π_0, a) 在 A 上的极小点，
子问题强凸模为 μ_k。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..geometry_operators import BaseActionSet, BaseGeometryOperator, BaseRegularizer
from ..mdp_operators import stationarity_residual
from ..pmd_operators import BaseSolverOperator, ConstantPolicy, SolverState, draw_probes
from ..strategies import PdaSchedule
from .accumulator import DualAccumulator
from .base import AccumulatorPolicy, pda_div_scale


@dataclass(frozen=True)
class NoisyAction:
    """以 mean 为中心的投影高斯动作"""

    mean: np.ndarray
    std: float
    action_set: BaseActionSet

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.std <= 0:
            return self.mean
        return self.action_set.project(self.mean + self.std * rng.standard_normal(self.mean.shape))


class ExplorationNoise:
    """
    探索噪声

    第 t 次迭代（t ≥ 1）的协方差为 (scale/√t)·I；scale = 0 时关闭。
    """

    def __init__(self, config: Dict[str, Any] = None):
        self.config = config or {}
        self.scale = float(self.config.get("scale", 1.0))
        if self.scale < 0:
            raise ValueError(f"噪声尺度必须非负，实际为 {self.scale}")

    def std(self, t: int) -> float:
        return float(np.sqrt(self.scale / np.sqrt(max(t, 1))))

    def behavior(self, policy, t: int, action_set: BaseActionSet):
        """π_k 加噪声后的行为策略"""
        std = self.std(t)

        def noisy(s) -> NoisyAction:
            return NoisyAction(np.asarray(policy(s), dtype=float), std, action_set)

        return noisy

    def __repr__(self) -> str:
        return f"ExplorationNoise(scale={self.scale})"


class ContinuousPdaOperator(BaseSolverOperator):
    """
    连续动作 PDA 运行

    −ψ̂ 在探测状态上按 β_k 加权，用于检验 O(1/(k+1)) 的包络。
    """

    def __init__(
        self,
        env,
        evaluator,
        geom: BaseGeometryOperator,
        reg: BaseRegularizer,
        schedule: PdaSchedule,
        config: Dict[str, Any] = None,
        noise: Optional[ExplorationNoise] = None,
        rng: Optional[np.random.Generator] = None,
        score_rng: Optional[np.random.Generator] = None,
        verbose: bool = False,
    ):
        super().__init__(geom, reg, config, verbose=verbose)
        if env.finite_actions:
            raise ValueError("ContinuousPdaOperator 只支持连续动作环境")
        self.env = env
        self.evaluator = evaluator
        self.schedule = schedule
        self.noise = noise or ExplorationNoise()
        self.rng = rng or np.random.default_rng(0)
        self.score_rng = score_rng or np.random.default_rng(1)
        self.tol = float(self.config.get("prox_tol", 1e-9))
        self.checkpoint = self.config.get("checkpoint")
        self.resume_from = self.config.get("resume_from")
        initial = self.config.get("initial_action")
        self.initial_action = env.action_set.project(
            np.zeros(env.action_dim) if initial is None else np.asarray(initial, dtype=float)
        )
        self.probe_states = draw_probes(env, int(self.config.get("n_probes", 16)), self.score_rng)
        self.trace.meta.update({"schedule": schedule.describe(), "mode": "continuous", "algorithm": "pda",
                                "noise_scale": self.noise.scale})

    def _metrics(self, policy, bootstrap=None) -> Dict[str, float]:
        return self.score_metrics(self.evaluator, policy, self.score_rng, bootstrap)

    def initialize(self) -> SolverState:
        if self.resume_from:
            acc = DualAccumulator.load(self.resume_from)
            self.evaluator.feature_map = acc.feature_map
            policy = AccumulatorPolicy(acc, self.geom, self.reg, self.env, self.tol)
            k = acc.n_terms
        else:
            acc = DualAccumulator(anchor=self.initial_action.copy(), feature_map=self.evaluator.feature_map)
            policy = ConstantPolicy(self.initial_action)
            k = 0
        return SolverState(k=k, policy=policy, accumulator=acc, info=self._metrics(policy))

    def iterate(self, state: SolverState) -> SolverState:
        self._tic()
        k = state.k
        behavior = self.noise.behavior(state.policy, k + 1, self.env.action_set)
        dataset = self.evaluator.collect(state.policy, self.rng, bootstrap=state.value_estimate,
                                         behavior=behavior)
        model = self.evaluator.fit(dataset)
        acc = state.accumulator.add(self.schedule.beta(k), theta=model.theta,
                                    lam=self.schedule.lam(k), mu=self.schedule.mu(k))
        nxt = AccumulatorPolicy(acc, self.geom, self.reg, self.env, self.tol)

        residual = stationarity_residual(state.policy, nxt, self.geom, self.reg,
                                         probes=self.probe_states, q_fn=model.value)
        previous = state.policy

        def value_estimate(s) -> float:
            return model.value(s, previous(s))

        info = self._metrics(nxt, value_estimate)
        info.update(self.psi_metrics(residual, k, self.schedule.beta(k), pda_div_scale(self.schedule, k)))
        if self.checkpoint:
            acc.save(Path(self.checkpoint), extra={"schedule": self.schedule.describe()})
        info.update(env_steps=dataset.env_steps, wall_ms=self._toc())

        return SolverState(k=k + 1, policy=nxt, model=model, accumulator=acc,
                           value_estimate=value_estimate, info=info)
