"""
策略对偶平均模块 (Policy Dual Averaging Module)

三层架构设计：
- 顶层：PdaModule（PDA 模块）
- 中层：PdaSchedule（β_k / λ_k 策略）
- 底层：Operators（精确 / 有限动作函数逼近 / 连续动作函数逼近）

核心功能：
π_{k+1}(s) = argmin_a Σ_{t≤k} β_t [Q^{π_t}(s, a) + h^a(s)] + λ_k D(π_0(s), a)

主要技术：
1. 对偶累加器
   - 精确模式累加 Q 表
   - 函数逼近模式在共享特征映射下累加权重，检查点可续跑

2. 连续动作
   - 行为策略带 N(0, (scale/√t) I) 探索噪声
   - 非凸情形的 λ = k(k+1)|μ_d| 需要预先固定步数
"""

from typing import Any, Dict, Optional

import numpy as np

from .context import RunContext, build_context
from .environments import EnvironmentModule
from .pda_operators import (
    ContinuousPdaOperator,
    DualAccumulator,
    ExactPdaOperator,
    ExplorationNoise,
    FiniteFaPdaOperator,
    pda_step_exact,
    pda_step_fa,
)
from .pmd import MODES, schedule_config
from .pmd_operators import BaseSolverOperator
from .strategies import PdaSchedule
from .traces import Trace


class PdaModule:
    """
    PDA 模块（顶层）

    Example:
        config = {
            "mode": "finite_fa",
            "k_max": 200,
            "environment": {"kind": "gridworld", "gamma": 0.99},
            "schedule": {"kind": "linear_beta_const_lambda", "lam": 1.0},
            "eval": {"n_samples": 100, "truncation": 50},
        }

        pda = PdaModule(config)
        trace = pda.run()
    """

    def __init__(
        self,
        config: Dict[str, Any] = None,
        environments: Optional[EnvironmentModule] = None,
        rngs: Optional[Dict[str, np.random.Generator]] = None,
        context: Optional[RunContext] = None,
        verbose: bool = False,
    ):
        """
        初始化 PDA 模块

        Args:
            config: 实验配置（额外读取 noise / checkpoint / resume_from）
            environments: 环境模块
            rngs: 随机数流
            context: 已组装好的运行上下文
            verbose: 是否打印详细信息
        """
        self.config = config or {}
        self.verbose = verbose
        self.environments = environments or EnvironmentModule(self.config.get("environment"), verbose)
        self.mode = self._resolve_mode()
        self.k_max = int(self.config.get("k_max", 100))
        self.context = context or build_context(
            self.config, self.environments, rngs, with_evaluator=self.mode != "exact", verbose=verbose
        )
        self.noise = ExplorationNoise(self.config.get("noise"))
        self.schedule = self._build_schedule(self.k_max)
        self.operator = self._init_operator()

    def _resolve_mode(self) -> str:
        env = self.environments.env
        default = "finite_fa" if env.finite_actions else "continuous"
        mode = str(self.config.get("mode", default)).lower()
        if mode not in MODES:
            print(f"⚠️  未知的 PDA 模式: {mode}，使用默认 {default}")
            mode = default
        if mode == "exact" and not self.environments.is_tabular:
            raise ValueError("精确 PDA 需要表格环境")
        if mode == "finite_fa" and not env.finite_actions:
            mode = "continuous"
        return mode

    def _build_schedule(self, k_max: int) -> PdaSchedule:
        return PdaSchedule(schedule_config(self.config, self.context.env, k_max), self.context.curvature)

    def _operator_config(self) -> Dict[str, Any]:
        eval_config = self.config.get("eval") or {}
        return {
            "record_timing": self.config.get("record_timing", False),
            "keep_policies": self.config.get("keep_policies", False),
            "probes": self.config.get("probes"),
            "seed": self.config.get("seed", 0),
            "diagnose_every": eval_config.get("diagnose_every", 0),
            "score": eval_config.get("score", True),
            "n_probes": eval_config.get("n_probes", 16),
            "prox_tol": self.config.get("prox_tol", 1e-9),
            "initial_action": self.config.get("initial_action"),
            "checkpoint": self.config.get("checkpoint"),
            "resume_from": self.config.get("resume_from"),
        }

    def _init_operator(self) -> BaseSolverOperator:
        """根据模式初始化 operator"""
        ctx = self.context
        config = self._operator_config()

        if self.mode == "exact":
            return ExactPdaOperator(ctx.mdp, ctx.geom, ctx.reg, self.schedule, config,
                                    ctx.oracle, ctx.weighting, verbose=self.verbose)
        elif self.mode == "finite_fa":
            return FiniteFaPdaOperator(ctx.env, ctx.evaluator, ctx.geom, ctx.reg, self.schedule, config,
                                       ctx.mdp, ctx.oracle, ctx.weighting,
                                       ctx.rngs["sampling"], ctx.rngs["scoring"], self.verbose)
        else:
            return ContinuousPdaOperator(ctx.env, ctx.evaluator, ctx.geom, ctx.reg, self.schedule, config,
                                         self.noise, ctx.rngs["sampling"], ctx.rngs["scoring"], self.verbose)

    def run(self, k_max: Optional[int] = None) -> Trace:
        """
        运行 PDA

        Args:
            k_max: 迭代次数（nonconvex 策略的 λ 依赖于它）

        Returns:
            Trace
        """
        k_max = self.k_max if k_max is None else int(k_max)
        if k_max != self.k_max:
            self.k_max = k_max
            self.schedule = self._build_schedule(k_max)
            self.operator = self._init_operator()
        return self.operator.run(k_max)

    def summary(self) -> Dict[str, Any]:
        return {
            "module": "PdaModule",
            "mode": self.mode,
            "operator": self.operator.name,
            "schedule": self.schedule.describe(),
            "k_max": self.k_max,
            "geometry": self.context.geom.name,
            "regularizer": self.context.reg.name,
            "noise": repr(self.noise),
        }


__all__ = [
    "PdaModule",
    "PdaSchedule",
    "DualAccumulator",
    "ExplorationNoise",
    "pda_step_exact",
    "pda_step_fa",
]
