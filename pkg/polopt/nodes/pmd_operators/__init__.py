"""
PMD Operators 包

1. 精确 PMD（表格）
2. 有限动作函数逼近 PMD（增广 L̃）
3. 连续动作函数逼近 PMD
"""

from .base import BaseSolverOperator, SolverState, as_policy_table
from .exact import pmd_step_exact, ExactPmdOperator
from .finite_fa import pmd_step_finite_fa, UniformPolicy, AugmentedModelPolicy, FiniteFaPmdOperator
from .continuous import (
    pmd_step_continuous_fa,
    ConstantPolicy,
    ContinuousModelPolicy,
    ContinuousPmdOperator,
    draw_probes,
    solve_or_best,
)

__all__ = [
    "BaseSolverOperator",
    "SolverState",
    "as_policy_table",
    "pmd_step_exact",
    "ExactPmdOperator",
    "pmd_step_finite_fa",
    "UniformPolicy",
    "AugmentedModelPolicy",
    "FiniteFaPmdOperator",
    "pmd_step_continuous_fa",
    "ConstantPolicy",
    "ContinuousModelPolicy",
    "ContinuousPmdOperator",
    "draw_probes",
    "solve_or_best",
]
