"""
MDP Operators 包

1. 表格 MDP 与策略数据类型
2. 精确策略评估、优势函数、访问测度、平稳分布
3. 最优解 Oracle（值迭代、策略迭代）
4. 平稳性诊断
"""

from .tabular import TabularMdp, PolicyTable, ValueFunctions, VisitationMeasure
from .evaluation import (
    evaluate_exact,
    policy_cost,
    advantage,
    advantage_table,
    visitation,
    performance_difference,
    objective_f,
    stationary_distribution,
)
from .oracles import (
    ValueIterationResult,
    OracleSolution,
    default_geometry,
    minimize_over_actions,
    bellman_operator,
    bellman_residual,
    policy_iteration_step,
    value_iteration,
    solve_oracle,
)
from .diagnostics import StationarityResidual, stationarity_residual

__all__ = [
    "TabularMdp",
    "PolicyTable",
    "ValueFunctions",
    "VisitationMeasure",
    "evaluate_exact",
    "policy_cost",
    "advantage",
    "advantage_table",
    "visitation",
    "performance_difference",
    "objective_f",
    "stationary_distribution",
    "ValueIterationResult",
    "OracleSolution",
    "default_geometry",
    "minimize_over_actions",
    "bellman_operator",
    "bellman_residual",
    "policy_iteration_step",
    "value_iteration",
    "solve_oracle",
    "StationarityResidual",
    "stationarity_residual",
]
