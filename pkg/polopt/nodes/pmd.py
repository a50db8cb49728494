"""
策略镜像下降模块 (Policy Mirror Descent Module)

三层架构设计：
- 顶层：PmdModule（PMD 模块）
- 中层：PmdSchedule（步长策略）
- 底层：Operators（精确 / 有限动作函数逼近 / 连续动作函数逼近）

核心功能：
π_{k+1}(s) = argmin_a {Q^{π_k}(s, a) + h^a(s) + (1/η_k) D(π_k(s), a)}

主要技术：
1. 精确模式
   - 闭式近端映射
   - 精确的 f、gap、𝒟(π_k, π*) 与价值单调性诊断

2. 有限动作函数逼近
   - 增广值函数 L̃ = Q̃ − ⟨∇̃ω, a⟩ 的 ridge 回归
   - 策略按需由 θ_k 现算

3. 连续动作函数逼近
   - 加速投影梯度求解强凸子问题
   - 探测状态上的平稳性残差
"""

from typing import Any, Dict, Optional

import numpy as np

from .context import RunContext, build_context
from .environments import EnvironmentModule
from .pmd_operators import (
    BaseSolverOperator,
    ContinuousPmdOperator,
    ExactPmdOperator,
    FiniteFaPmdOperator,
    pmd_step_continuous_fa,
    pmd_step_exact,
    pmd_step_finite_fa,
)
from .strategies import PmdSchedule
from .traces import Trace

MODES = ("exact", "finite_fa", "continuous")


def schedule_config(config: Dict[str, Any], env, k_max: Optional[int]) -> Dict[str, Any]:
    """补全步长策略配置：gamma / c_bar 取环境的值，horizon 取 k_max"""
    schedule = dict(config.get("schedule") or {})
    schedule.setdefault("gamma", env.gamma)
    schedule.setdefault("c_bar", env.c_bar)
    if k_max is not None:
        schedule.setdefault("horizon", int(k_max))
    return schedule


class PmdModule:
    """
    PMD 模块（顶层）

    使用方式：
    1. 传入实验配置与环境模块
    2. 根据 mode 选择 operator
    3. 调用 run 得到轨迹

    Example:
        config = {
            "mode": "exact",
            "k_max": 150,
            "geometry": {"kind": "entropy"},
            "schedule": {"kind": "geometric"},
        }

        pmd = PmdModule(config, EnvironmentModule({"kind": "random_tabular"}))
        trace = pmd.run()
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
        初始化 PMD 模块

        Args:
            config: 实验配置
            environments: 环境模块
            rngs: 随机数流
            context: 已组装好的运行上下文（优先于 environments）
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
        self.schedule = PmdSchedule(
            schedule_config(self.config, self.context.env, self.k_max), self.context.curvature
        )
        self.operator = self._init_operator()

    def _resolve_mode(self) -> str:
        env = self.environments.env
        default = "finite_fa" if env.finite_actions else "continuous"
        mode = str(self.config.get("mode", default)).lower()
        if mode not in MODES:
            print(f"⚠️  未知的 PMD 模式: {mode}，使用默认 {default}")
            mode = default
        if mode == "exact" and not self.environments.is_tabular:
            raise ValueError("精确 PMD 需要表格环境")
        if mode == "finite_fa" and not env.finite_actions:
            mode = "continuous"
        return mode

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
        }

    def _init_operator(self) -> BaseSolverOperator:
        """根据模式初始化 operator"""
        ctx = self.context
        config = self._operator_config()

        if self.mode == "exact":
            return ExactPmdOperator(ctx.mdp, ctx.geom, ctx.reg, self.schedule, config,
                                    ctx.oracle, ctx.weighting, verbose=self.verbose)
        elif self.mode == "finite_fa":
            return FiniteFaPmdOperator(ctx.env, ctx.evaluator, ctx.geom, ctx.reg, self.schedule, config,
                                       ctx.mdp, ctx.oracle, ctx.weighting,
                                       ctx.rngs["sampling"], ctx.rngs["scoring"], self.verbose)
        else:
            return ContinuousPmdOperator(ctx.env, ctx.evaluator, ctx.geom, ctx.reg, self.schedule,
                                         ctx.curvature, config, ctx.rngs["sampling"], ctx.rngs["scoring"],
                                         self.verbose)

    def run(self, k_max: Optional[int] = None) -> Trace:
        """
        运行 PMD

        Args:
            k_max: 迭代次数（默认取配置；与 horizon 不一致时策略需要重建）

        Returns:
            Trace
        """
        k_max = self.k_max if k_max is None else int(k_max)
        if k_max != self.k_max:
            self.k_max = k_max
            self.schedule = PmdSchedule(schedule_config(self.config, self.context.env, k_max), self.context.curvature)
            self.operator = self._init_operator()
        return self.operator.run(k_max)

    def summary(self) -> Dict[str, Any]:
        """
        返回模块摘要信息

        Returns:
            摘要字典
        """
        return {
            "module": "PmdModule",
            "mode": self.mode,
            "operator": self.operator.name,
            "schedule": self.schedule.describe(),
            "k_max": self.k_max,
            "geometry": self.context.geom.name,
            "regularizer": self.context.reg.name,
            "oracle": self.context.oracle is not None,
        }


__all__ = [
    "PmdModule",
    "PmdSchedule",
    "pmd_step_exact",
    "pmd_step_finite_fa",
    "pmd_step_continuous_fa",
    "schedule_config",
]
