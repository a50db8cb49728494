"""
对偶累加器

精确模式累加 Σ_t β_t Q_0^{π_t}；函数逼近模式在共享特征映射下累加 Σ_t β_t θ_t
（Q̃ 关于 θ 线性，所以累加权重的模型等于各个模型的加权和）。

累加器是快照式的：add() 返回新对象，旧快照可以被并发读取。
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from ..errors import ProxConvergenceError
from ..geometry_operators import BaseActionSet, BaseGeometryOperator, BaseRegularizer, bregman_prox, prox_generic
from ..policy_eval_operators import BaseFeatureMap, QModel, feature_map_from_dict


def _tolist(array: Optional[np.ndarray]):
    return None if array is None else np.asarray(array).tolist()


def _array(payload) -> Optional[np.ndarray]:
    return None if payload is None else np.asarray(payload, dtype=float)


@dataclass(frozen=True, eq=False)
class DualAccumulator:
    """
    对偶累加器

    Attributes:
        beta_sum: Σ_{t≤k} β_t（h 的系数）
        lam: λ_k
        mu: 子问题的强凸模 μ_k
        anchor: π_0（按状态的矩阵或单个动作向量）
        q_sum: 精确模式的 Σβ_t Q_0^{π_t}
        weights: 函数逼近模式的 Σβ_t θ_t
        feature_map: 共享特征映射
        n_terms: 已累加的项数
    """

    beta_sum: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    anchor: Optional[np.ndarray] = None
    q_sum: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    feature_map: Optional[BaseFeatureMap] = None
    n_terms: int = 0

    def add(
        self,
        beta: float,
        q: Optional[np.ndarray] = None,
        theta: Optional[np.ndarray] = None,
        lam: Optional[float] = None,
        mu: Optional[float] = None,
    ) -> "DualAccumulator":
        """
        累加一项 β_k Q_0^{π_k}（或 β_k θ_k），返回新快照

        Args:
            beta: β_k
            q: 精确 Q_0^{π_k}
            theta: 拟合的 θ_k
            lam: 新的 λ_k
            mu: 新的 μ_k
        """
        if (q is None) == (theta is None):
            raise ValueError("q 与 theta 必须恰好给出一个")
        changes: Dict[str, Any] = {"beta_sum": self.beta_sum + beta, "n_terms": self.n_terms + 1}
        if q is not None:
            q = beta * np.asarray(q, dtype=float)
            changes["q_sum"] = q if self.q_sum is None else self.q_sum + q
        else:
            theta = beta * np.asarray(theta, dtype=float)
            changes["weights"] = theta if self.weights is None else self.weights + theta
        if lam is not None:
            changes["lam"] = float(lam)
        if mu is not None:
            changes["mu"] = float(mu)
        return replace(self, **changes)

    def model(self, env=None) -> QModel:
        """Σβ_t Q̃(·; θ_t) 对应的线性模型"""
        if self.weights is None or self.feature_map is None:
            raise ValueError("累加器没有函数逼近权重")
        return QModel(theta=self.weights, feature_map=self.feature_map, env=env)

    def anchor_at(self, key=None) -> Optional[np.ndarray]:
        if self.anchor is None or self.anchor.ndim == 1 or key is None:
            return self.anchor
        return self.anchor[key]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta_sum": self.beta_sum,
            "lam": self.lam,
            "mu": self.mu,
            "n_terms": self.n_terms,
            "anchor": _tolist(self.anchor),
            "q_sum": _tolist(self.q_sum),
            "weights": _tolist(self.weights),
            "feature_map": None if self.feature_map is None else self.feature_map.to_dict(),
        }

    def save(self, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> None:
        """写 JSON 检查点（特征映射含种子与锚点）"""
        payload = self.to_dict()
        if extra:
            payload["extra"] = extra
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "DualAccumulator":
        fmap = payload.get("feature_map")
        return cls(
            beta_sum=float(payload["beta_sum"]),
            lam=float(payload["lam"]),
            mu=float(payload["mu"]),
            anchor=_array(payload.get("anchor")),
            q_sum=_array(payload.get("q_sum")),
            weights=_array(payload.get("weights")),
            feature_map=None if fmap is None else feature_map_from_dict(fmap),
            n_terms=int(payload.get("n_terms", 0)),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DualAccumulator":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def accumulator_policy(
    acc: DualAccumulator,
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    action_set: BaseActionSet,
    s,
    env=None,
    tol: float = 1e-9,
) -> np.ndarray:
    """
    π_{k+1}(s) = argmin_a Σ_t β_t [Q̃(s, a; θ_t) + h^a(s)] + λ_k D(π_0(s), a)

    纯函数：相同的 (累加器, s) 总是得到相同的动作。

    Args:
        acc: 累加器快照
        geom: Bregman 几何
        reg: 正则项
        action_set: 动作集合
        s: 状态（精确模式为状态下标）
        env: 函数逼近模式下用于编码的环境
        tol: 子问题精度

    Returns:
        动作（有限动作时为单纯形上的点）
    """
    if acc.q_sum is not None:
        key = int(s)
        return bregman_prox(geom, reg, action_set, acc.q_sum[key], acc.beta_sum, acc.lam,
                            acc.anchor_at(key), key, tol)

    model = acc.model(env)
    if env.finite_actions:
        key = env.state_key(s)
        return bregman_prox(geom, reg, action_set, model.q0(s), acc.beta_sum, acc.lam,
                            acc.anchor_at(key), key, tol)

    if acc.mu <= 0:
        raise ValueError(f"子问题不是强凸的：μ_k = {acc.mu}")
    anchor = acc.anchor_at()
    grad_anchor = geom.grad_omega(anchor)

    def oracle(a: np.ndarray):
        value = model.value(s, a) + acc.beta_sum * float(reg.value(a)) \
            + acc.lam * float(geom.divergence(anchor, a, clip=True))
        grad = model.action_gradient(s, a) + acc.beta_sum * reg.grad(a) \
            + acc.lam * (geom.grad_omega(a) - grad_anchor)
        return value, grad

    return prox_generic(oracle, action_set, acc.mu, x0=anchor, tol=tol)


__all__ = ["DualAccumulator", "accumulator_policy", "ProxConvergenceError"]
