"""
平稳性诊断

相邻两次策略 π_k → π_{k+1} 在探测状态上的残差：
- neg_advantage: −ψ^{π_k}(s, π_{k+1}(s))
- div_forward: D(π_k(s), π_{k+1}(s))
- div_backward: D(π_{k+1}(s), π_k(s))

表格情形直接用精确的 Q_0；连续动作时传入拟合得到的 q_fn(s, a)。
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..geometry_operators import BaseGeometryOperator, BaseRegularizer
from .tabular import ValueFunctions


@dataclass(frozen=True, eq=False)
class StationarityResidual:
    """
    平稳性残差

    Attributes:
        neg_advantage / div_forward / div_backward: 探测状态上的均值
        per_probe_*: 每个探测状态上的值
    """

    neg_advantage: float
    div_forward: float
    div_backward: float
    per_probe_neg_advantage: np.ndarray
    per_probe_div_forward: np.ndarray
    per_probe_div_backward: np.ndarray

    def as_dict(self):
        return {
            "neg_advantage": self.neg_advantage,
            "div_forward": self.div_forward,
            "div_backward": self.div_backward,
        }


def _pack(neg_adv: np.ndarray, fwd: np.ndarray, bwd: np.ndarray) -> StationarityResidual:
    return StationarityResidual(
        neg_advantage=float(np.mean(neg_adv)),
        div_forward=float(np.mean(fwd)),
        div_backward=float(np.mean(bwd)),
        per_probe_neg_advantage=np.asarray(neg_adv, dtype=float),
        per_probe_div_forward=np.asarray(fwd, dtype=float),
        per_probe_div_backward=np.asarray(bwd, dtype=float),
    )


def stationarity_residual(
    pi_k,
    pi_next,
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    vals: Optional[ValueFunctions] = None,
    probes: Optional[Sequence] = None,
    q_fn: Optional[Callable] = None,
) -> StationarityResidual:
    """
    计算平稳性残差

    Args:
        pi_k: 当前策略（PolicyTable、行矩阵或 state -> action 的函数）
        pi_next: 下一步策略
        geom: Bregman 几何
        reg: 正则项
        vals: π_k 的精确价值函数（表格情形）
        probes: 探测状态；表格情形默认全部状态
        q_fn: 连续情形的 Q̃(s, a)

    Returns:
        StationarityResidual
    """
    if vals is not None:
        rows = pi_k.rows if hasattr(pi_k, "rows") else np.asarray(pi_k, dtype=float)
        rows_next = pi_next.rows if hasattr(pi_next, "rows") else np.asarray(pi_next, dtype=float)
        states = np.arange(rows.shape[0]) if probes is None else np.asarray(probes, dtype=int)
        a, b = rows[states], rows_next[states]
        neg_adv = -(
            np.sum(vals.Q[states] * (b - a), axis=1)
            + reg.value(b, states)
            - reg.value(a, states)
        )
        fwd = geom.divergence(a, b, clip=True)
        bwd = geom.divergence(b, a, clip=True)
        return _pack(neg_adv, np.atleast_1d(fwd), np.atleast_1d(bwd))

    if q_fn is None or probes is None:
        raise ValueError("连续情形需要同时提供 q_fn 与 probes")

    neg_adv, fwd, bwd = [], [], []
    for s in probes:
        a, b = np.asarray(pi_k(s), dtype=float), np.asarray(pi_next(s), dtype=float)
        psi = q_fn(s, b) + reg.value(b) - q_fn(s, a) - reg.value(a)
        neg_adv.append(-float(psi))
        fwd.append(float(geom.divergence(a, b, clip=True)))
        bwd.append(float(geom.divergence(b, a, clip=True)))
    return _pack(np.array(neg_adv), np.array(fwd), np.array(bwd))
