"""
Environment Operators 包

1. 表格环境（TabularMdp 包装、随机表格 MDP）
2. 带陷阱的网格世界
3. 线性二次调节器
4. 倒立摆
"""

from .base import BaseEnvironment
from .tabular_env import TabularEnvironment
from .random_mdp import random_tabular
from .gridworld import GridWorldSpec, GridWorldEnvironment, gridworld_to_tabular
from .lqr import LqrSpec, LqrEnvironment, lqr_step, riccati_feedback, linear_feedback_cost
from .pendulum import PendulumSpec, PendulumEnvironment, pendulum_step

__all__ = [
    "BaseEnvironment",
    "TabularEnvironment",
    "random_tabular",
    "GridWorldSpec",
    "GridWorldEnvironment",
    "gridworld_to_tabular",
    "LqrSpec",
    "LqrEnvironment",
    "lqr_step",
    "riccati_feedback",
    "linear_feedback_cost",
    "PendulumSpec",
    "PendulumEnvironment",
    "pendulum_step",
]
