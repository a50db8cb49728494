"""
PDA 公共部分

- AccumulatorPolicy: 由累加器快照隐式定义的 π_{k+1}
- pda_allowance / pda_div_scale: 轨迹中 PDA 特有的修正项
"""

from threading import Lock
from typing import Any, Dict, Sequence

import numpy as np

from ..geometry_operators import BaseGeometryOperator, BaseRegularizer, bregman_prox
from ..pmd_operators import solve_or_best
from ..strategies import PdaSchedule
from .accumulator import DualAccumulator, accumulator_policy

ANCHOR_FLOOR = 1e-6


def clamped_anchor(rows: np.ndarray, floor: float = ANCHOR_FLOOR) -> np.ndarray:
    """把参考策略截断到 floor 以上再归一化（熵几何下直径才有限）"""
    rows = np.maximum(np.asarray(rows, dtype=float), floor)
    return rows / rows.sum(axis=-1, keepdims=True)


def mu_prev(schedule: PdaSchedule, k: int) -> float:
    """μ_{k−1}，约定 μ_{−1} = λ_0"""
    return schedule.mu(k - 1) if k > 0 else schedule.lam(0)


def pda_div_scale(schedule: PdaSchedule, k: int) -> tuple:
    beta = schedule.beta(k)
    return schedule.mu(k) / beta, mu_prev(schedule, k) / beta


def pda_allowance(schedule: PdaSchedule, k: int, gamma: float, diameter: float) -> float:
    """γ(λ_k − λ_{k−1}) D̄_A / ((1−γ) β_k)"""
    increase = schedule.lam(k) - schedule.lam_prev(k)
    if increase <= 0:
        return 0.0
    return gamma * increase * diameter / ((1.0 - gamma) * schedule.beta(k))


class AccumulatorPolicy:
    """
    π_{k+1}(s) = argmin_a Σ_t β_t [Q̃_t(s, a) + h^a(s)] + λ_k D(π_0(s), a)

    有限动作按状态下标缓存；连续动作每次调用都求解一次子问题。
    """

    def __init__(self, acc: DualAccumulator, geom: BaseGeometryOperator, reg: BaseRegularizer,
                 env, tol: float = 1e-9):
        self.acc = acc
        self.geom = geom
        self.reg = reg
        self.env = env
        self.tol = tol
        self._cache: Dict[Any, np.ndarray] = {}
        self._lock = Lock()
        self._warned: list = []

    def __call__(self, s) -> np.ndarray:
        if not self.env.finite_actions:
            return solve_or_best(
                lambda: accumulator_policy(self.acc, self.geom, self.reg, self.env.action_set, s,
                                           self.env, self.tol),
                self._warned,
            )
        key = self.env.state_key(s)
        if key is not None and key in self._cache:
            return self._cache[key]
        row = accumulator_policy(self.acc, self.geom, self.reg, self.env.action_set, s, self.env, self.tol)
        if key is not None:
            with self._lock:
                self._cache[key] = row
        return row

    def table(self, states: Sequence) -> np.ndarray:
        """有限动作的批量求值（填充缓存）"""
        env = self.env
        g = self.acc.model(env).q0_table(states)
        keys = [env.state_key(s) for s in states]
        state_arg = np.asarray(keys) if keys and keys[0] is not None else None
        anchor = self.acc.anchor
        ref = anchor[state_arg] if anchor.ndim == 2 and state_arg is not None else np.broadcast_to(anchor, g.shape)
        rows = bregman_prox(self.geom, self.reg, env.action_set, g, self.acc.beta_sum, self.acc.lam,
                            ref, state_arg, self.tol)
        rows = np.clip(rows, 0.0, None)
        rows = rows / rows.sum(axis=1, keepdims=True)
        if state_arg is not None:
            with self._lock:
                self._cache.update(zip(keys, rows))
        return rows
