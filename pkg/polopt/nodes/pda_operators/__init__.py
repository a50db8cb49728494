"""
PDA Operators 包

1. 对偶累加器（精确 Σβ_t Q_t / 函数逼近 Σβ_t θ_t）
2. 精确 PDA（表格）
3. 有限动作函数逼近 PDA
4. 连续动作函数逼近 PDA（探索噪声）
"""

from .accumulator import DualAccumulator, accumulator_policy
from .base import AccumulatorPolicy, clamped_anchor, pda_allowance, pda_div_scale, mu_prev
from .exact import pda_step_exact, ExactPdaOperator
from .finite_fa import pda_step_fa, FiniteFaPdaOperator
from .continuous import ExplorationNoise, NoisyAction, ContinuousPdaOperator

__all__ = [
    "DualAccumulator",
    "accumulator_policy",
    "AccumulatorPolicy",
    "clamped_anchor",
    "pda_allowance",
    "pda_div_scale",
    "mu_prev",
    "pda_step_exact",
    "ExactPdaOperator",
    "pda_step_fa",
    "FiniteFaPdaOperator",
    "ExplorationNoise",
    "NoisyAction",
    "ContinuousPdaOperator",
]
