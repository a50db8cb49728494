"""
正则项 Operators

1. Null: h ≡ 0
2. KlToAnchor: h^a(s) = λ_h · KL(a ‖ π_0(s))
3. Quadratic: h^a(s) = (λ_h/2)‖a − c‖²
4. ConcaveQuadratic: h^a(s) = offset − (ρ/2)‖a − c‖²，弱凸替身，μ_h = −ρ
"""

from typing import Any, Dict, Optional

import numpy as np
from scipy.special import kl_div

from .base import BaseRegularizer
from .bregman import LOG_FLOOR


def resolve_anchor(anchor, action_dim: int) -> Optional[np.ndarray]:
    """把配置中的锚点（"uniform"、列表或数组）转成数组"""
    if anchor is None:
        return None
    if isinstance(anchor, str):
        if anchor == "uniform":
            return np.full(action_dim, 1.0 / action_dim)
        if anchor == "zero":
            return np.zeros(action_dim)
        raise ValueError(f"未知的锚点: {anchor}")
    out = np.array(anchor, dtype=float)
    out.setflags(write=False)
    return out


class NullRegularizer(BaseRegularizer):
    """无正则"""

    kind = "null"

    def value(self, a, state=None):
        a = np.asarray(a, dtype=float)
        out = np.zeros(a.shape[:-1])
        return float(out) if out.ndim == 0 else out

    def grad(self, a, state=None):
        return np.zeros_like(np.asarray(a, dtype=float))


class KlToAnchorRegularizer(BaseRegularizer):
    """
    KL 正则 λ_h · KL(a ‖ π_0(s))

    相对 Entropy 几何 μ_h = λ_h；由 KL ≥ ½‖·‖₁² ≥ ½‖·‖₂²，对欧氏几何同样成立。
    在边界附近不是 Lipschitz 的，M_h 取声明值（默认 λ_h·max(1, −log min π_0)）。
    """

    kind = "kl_to_anchor"

    def __init__(self, config: Dict[str, Any] = None, action_dim: int = 2):
        super().__init__(config)
        if self.weight < 0:
            raise ValueError("KL 正则权重必须非负")
        self.anchor = resolve_anchor(self.config.get("anchor", "uniform"), action_dim)
        if np.any(self.anchor <= 0):
            raise ValueError("KL 正则的锚点策略必须严格为正")
        self.mu_h = self.weight
        self.lipschitz = float(self.config.get(
            "lipschitz", self.weight * max(1.0, -np.log(np.min(self.anchor)))
        ))

    def value(self, a, state=None):
        a = np.asarray(a, dtype=float)
        out = self.weight * np.sum(kl_div(a, self.anchor_at(state)), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def grad(self, a, state=None):
        a = np.asarray(a, dtype=float)
        return self.weight * (np.log(np.maximum(a, LOG_FLOOR)) - np.log(self.anchor_at(state)) + 1.0)

    def upper_bound(self) -> float:
        return float(self.weight * -np.log(np.min(self.anchor)))


class QuadraticRegularizer(BaseRegularizer):
    """
    二次正则 (λ_h/2)‖a − c‖²

    μ_h = λ_h 相对欧氏散度。
    """

    kind = "quadratic"

    def __init__(self, config: Dict[str, Any] = None, action_dim: int = 2):
        super().__init__(config)
        if self.weight < 0:
            raise ValueError("二次正则权重必须非负，凹二次项请使用 concave_quadratic")
        self.anchor = resolve_anchor(self.config.get("anchor", "uniform"), action_dim)
        self.curvature = self.weight
        self.mu_h = self.weight
        reach = float(self.config.get("reach", np.sqrt(2.0)))
        self.lipschitz = float(self.config.get("lipschitz", self.weight * reach))
        self._reach = reach

    def value(self, a, state=None):
        diff = np.asarray(a, dtype=float) - self.anchor_at(state)
        out = 0.5 * self.curvature * np.sum(diff * diff, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def grad(self, a, state=None):
        return self.curvature * (np.asarray(a, dtype=float) - self.anchor_at(state))

    def upper_bound(self) -> float:
        return 0.5 * self.weight * self._reach ** 2


class ConcaveQuadraticRegularizer(QuadraticRegularizer):
    """
    凹二次项 offset − (ρ/2)‖a − c‖²

    用来在表格 MDP 上构造 μ_d < 0 的弱凸问题。offset 默认取 ρ，
    锚点在单纯形上时 ‖a − c‖² ≤ 2，从而 h ≥ 0。
    """

    kind = "concave_quadratic"

    def __init__(self, config: Dict[str, Any] = None, action_dim: int = 2):
        config = dict(config or {})
        rho = float(config.get("weight", 0.0))
        if rho <= 0:
            raise ValueError("凹二次项的模 ρ 必须为正")
        config["weight"] = 0.0
        super().__init__(config, action_dim)
        self.config["weight"] = rho
        self.weight = rho
        self.curvature = -rho
        self.mu_h = -rho
        self.offset = float(self.config.get("offset", rho))
        self.lipschitz = float(self.config.get("lipschitz", rho * self._reach))

    def value(self, a, state=None):
        out = self.offset + super().value(a, state)
        return float(out) if np.ndim(out) == 0 else out

    def upper_bound(self) -> float:
        return self.offset
