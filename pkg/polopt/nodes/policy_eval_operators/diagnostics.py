"""
评估误差诊断

把 Q̃_0(s; θ_k) − Q_0^{π_k}(s) 分解为
- 确定性误差 δ^det = E[Q̃_0] − Q_0（再分为近似误差 δ^app 与估计偏差 δ^bia）
- 随机误差 δ^sto = Q̃_0 − E[Q̃_0]

期望通过 R 次重新采样、重新拟合的经验均值近似。
"""

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .sampling import spawn_generators

Refit = Callable[[np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class ErrorReport:
    """
    误差报告

    Attributes:
        det_error: ς̂ = E_s ‖δ^det(s)‖_∞
        sto_error: σ̂² = E ‖δ^sto(s)‖²_∞
        app_error: E_s ‖δ^app(s)‖_∞（需要类内最优拟合）
        bia_error: E_s ‖δ^bia(s)‖_∞
        n_resamples: 重新拟合次数 R
    """

    det_error: float
    sto_error: float
    app_error: float = float("nan")
    bia_error: float = float("nan")
    n_resamples: int = 0

    def as_dict(self):
        return asdict(self)


def _weighted_sup(delta: np.ndarray, weights: np.ndarray, power: int = 1) -> float:
    return float(weights @ (np.max(np.abs(delta), axis=-1) ** power))


def diagnose_errors(
    refit: Refit,
    exact_q0: np.ndarray,
    states,
    weights: Optional[np.ndarray] = None,
    best_fit: Optional[np.ndarray] = None,
    n_resamples: int = 20,
    rng: Optional[np.random.Generator] = None,
) -> ErrorReport:
    """
    重新采样估计 ς 与 σ²

    Args:
        refit: 给定随机数生成器，重新采样、拟合，并返回探测状态上的 Q̃_0 [n_probe × n_A]
        exact_q0: 探测状态上的精确 Q_0 [n_probe × n_A]
        states: 探测状态（只用于校验长度）
        weights: 探测状态权重（默认均匀）
        best_fit: 在精确目标上拟合得到的类内最优 Q̃_0
        n_resamples: R
        rng: 随机数生成器

    Returns:
        ErrorReport
    """
    exact_q0 = np.atleast_2d(np.asarray(exact_q0, dtype=float))
    n_probe = exact_q0.shape[0]
    if len(states) != n_probe:
        raise ValueError(f"探测状态数 {len(states)} 与精确 Q 的行数 {n_probe} 不一致")
    if n_resamples < 2:
        raise ValueError("n_resamples 至少为 2")
    weights = np.full(n_probe, 1.0 / n_probe) if weights is None else np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    rng = rng or np.random.default_rng(0)

    fits = np.stack([np.asarray(refit(stream), dtype=float).reshape(exact_q0.shape)
                     for stream in spawn_generators(rng, n_resamples)])
    mean_fit = fits.mean(axis=0)

    det_error = _weighted_sup(mean_fit - exact_q0, weights)
    sto_error = float(np.mean([_weighted_sup(fit - mean_fit, weights, power=2) for fit in fits]))

    app_error = bia_error = float("nan")
    if best_fit is not None:
        best_fit = np.asarray(best_fit, dtype=float).reshape(exact_q0.shape)
        app_error = _weighted_sup(best_fit - exact_q0, weights)
        bia_error = _weighted_sup(mean_fit - best_fit, weights)

    return ErrorReport(det_error, sto_error, app_error, bia_error, n_resamples)
