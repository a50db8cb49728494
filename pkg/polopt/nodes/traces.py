"""
迭代轨迹记录

PMD 与 PDA 的所有运行方式（精确 / 有限动作函数逼近 / 连续动作）共用同一种记录，
未涉及的字段保持 NaN。
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

NAN = float("nan")


@dataclass
class TraceRecord:
    """
    单次迭代的记录

    Attributes:
        iteration: 迭代下标 k
        f: f(π_k)（精确或 Monte Carlo 估计）
        gap: f(π_k) − f*
        D_to_opt: 𝒟(π_k, π*)
        max_value_increase: max_s [V^{π_{k+1}}(s) − V^{π_k}(s)] 减去允许的修正项
        min_neg_psi: 探测状态上 −ψ 的历史最小值的均值
        neg_psi: 本次迭代的 −ψ 均值
        div_forward / div_backward: 相邻策略之间的散度残差
        varsigma_hat / sigma2_hat: 评估误差诊断
        episode_score: 环境原生得分
        f_truncated / f_bootstrap: Monte Carlo 打分的截断回报与 bootstrap 修正回报
        env_steps: 本次迭代的环境步数
        wall_ms: 本次迭代耗时（毫秒）
    """

    iteration: int
    f: float = NAN
    gap: float = NAN
    D_to_opt: float = NAN
    max_value_increase: float = NAN
    min_neg_psi: float = NAN
    neg_psi: float = NAN
    div_forward: float = NAN
    div_backward: float = NAN
    varsigma_hat: float = NAN
    sigma2_hat: float = NAN
    app_error: float = NAN
    bia_error: float = NAN
    episode_score: float = NAN
    f_truncated: float = NAN
    f_bootstrap: float = NAN
    env_steps: int = 0
    wall_ms: float = NAN

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


class ResidualTracker:
    """
    逐探测状态维护 min_{t≤k} [−ψ^{π_t}(s, π_{t+1}(s))] 及其下标
    """

    def __init__(self):
        self.best_value: Optional[np.ndarray] = None
        self.best_index: Optional[np.ndarray] = None
        self.history: List[np.ndarray] = []

    def update(self, per_probe: np.ndarray, iteration: int) -> float:
        per_probe = np.asarray(per_probe, dtype=float)
        self.history.append(per_probe)
        if self.best_value is None:
            self.best_value = per_probe.copy()
            self.best_index = np.full(per_probe.shape, iteration, dtype=int)
        else:
            better = per_probe < self.best_value
            self.best_value = np.where(better, per_probe, self.best_value)
            self.best_index = np.where(better, iteration, self.best_index)
        return float(np.mean(self.best_value))

    def running_min(self, upto: int) -> np.ndarray:
        """前 upto 次迭代上的逐探测状态最小值"""
        return np.min(np.stack(self.history[:upto]), axis=0)


@dataclass
class Trace:
    """
    一次运行的完整轨迹

    Attributes:
        records: 每次迭代的记录
        best_index: 每个探测状态取到最小 −ψ 的迭代下标
        random_index: 均匀随机抽取的迭代下标
        policies: 可选的策略快照
        meta: 运行参数
    """

    records: List[TraceRecord] = field(default_factory=list)
    best_index: Optional[np.ndarray] = None
    random_index: Optional[int] = None
    policies: List[Any] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.as_dict() for r in self.records])

    def __len__(self) -> int:
        return len(self.records)
