"""
运行上下文

PMD 与 PDA 模块共用的组装逻辑：几何、正则项、曲率常数、精确 Oracle 与策略评估器。
"""

from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

import numpy as np

from .environments import EnvironmentModule
from .geometry import build_geometry, build_regularizer
from .geometry_operators import BaseGeometryOperator, BaseRegularizer, EuclideanGeometry
from .mdp import MdpModule
from .mdp_operators import OracleSolution, TabularMdp, default_geometry
from .policy_eval import PolicyEvalModule
from .strategies import CurvatureSpec

STREAMS = ("env", "sampling", "features", "scoring")


@dataclass
class RunContext:
    """
    一次运行所需的全部组件

    Attributes:
        env: 环境
        geom / reg: 几何与正则项
        curvature: 曲率常数
        mdp: 表格 MDP（连续环境为 None）
        oracle: 最优解（未计算时为 None）
        weighting: 目标函数权重
        evaluator: 策略评估模块
        rngs: 随机数流
    """

    env: Any
    geom: BaseGeometryOperator
    reg: BaseRegularizer
    curvature: CurvatureSpec
    mdp: Optional[TabularMdp]
    oracle: Optional[OracleSolution]
    weighting: Optional[np.ndarray]
    evaluator: Optional[PolicyEvalModule]
    rngs: Dict[str, np.random.Generator]


def build_context(
    config: Dict[str, Any],
    environments: EnvironmentModule,
    rngs: Optional[Dict[str, np.random.Generator]] = None,
    with_evaluator: bool = True,
    verbose: bool = False,
) -> RunContext:
    """
    根据实验配置组装运行上下文

    Args:
        config: 实验配置（geometry / regularizer / curvature / eval / exact_diagnostics）
        environments: 环境模块
        rngs: 以 env / sampling / features / scoring 为键的随机数流
        with_evaluator: 是否构建策略评估模块
        verbose: 是否打印详细信息

    Returns:
        RunContext
    """
    env = environments.env
    rngs = dict(rngs or {})
    for i, name in enumerate(STREAMS):
        rngs.setdefault(name, np.random.default_rng(i))

    reg_config = config.get("regularizer") or {}
    geom_config = config.get("geometry") or {}
    reg = build_regularizer(reg_config, env.action_dim)
    if geom_config:
        geom = build_geometry(geom_config, env.action_dim)
    elif env.finite_actions:
        geom = default_geometry(reg, env.action_dim)
    else:
        geom = EuclideanGeometry({"action_dim": env.action_dim})

    curvature = CurvatureSpec.from_config(config.get("curvature"), reg)
    if env.finite_actions and curvature.mu_Q != 0.0:
        print(f"⚠️  有限动作情形 Q 关于动作是线性的，mu_Q = {curvature.mu_Q} 改为 0")
        curvature = replace(curvature, mu_Q=0.0)

    mdp = oracle = weighting = None
    if environments.is_tabular:
        mdp = environments.tabular()
        weighting = environments.weighting()
        if config.get("exact_diagnostics", True):
            mdp_module = MdpModule(mdp, {
                "regularizer": reg_config,
                "geometry": geom_config or None,
                "weighting": "nu_star" if weighting is None else weighting,
                "verbose": verbose,
            })
            oracle = mdp_module.oracle()
            weighting = oracle.nu

    evaluator = None
    if with_evaluator:
        eval_config = dict(config.get("eval") or {})
        features = dict(eval_config.get("features") or {})
        features.setdefault("seed", int(rngs["features"].integers(2 ** 31)))
        eval_config["features"] = features
        evaluator = PolicyEvalModule(env, eval_config, mdp, reg, verbose)

    return RunContext(env, geom, reg, curvature, mdp, oracle, weighting, evaluator, rngs)
