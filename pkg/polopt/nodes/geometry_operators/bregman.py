"""
Bregman 几何 Operators

1. Entropy: ω(a) = Σ a_i log a_i，D(a_ref, a) = KL(a ‖ a_ref)，ℓ1 强凸
2. Euclidean: ω(a) = ½‖a‖²，D(a_ref, a) = ½‖a − a_ref‖²
3. NegTsallis: ω(a) = (1 − Σ a_i^q) / (q(1 − q))，q ∈ (0, 2) 且 q ≠ 1
"""

from typing import Any, Dict

import numpy as np
from scipy.special import kl_div, xlogy

from ..errors import GeometryDomainError
from .base import BaseGeometryOperator

LOG_FLOOR = 1e-300


def _reduce(values: np.ndarray):
    total = np.sum(values, axis=-1)
    return float(total) if np.ndim(total) == 0 else total


class EntropyGeometry(BaseGeometryOperator):
    """
    负熵几何

    在单纯形上 D(a_ref, a) 就是 KL(a ‖ a_ref)；
    这里用广义 KL Σ[a log(a/a_ref) − a + a_ref]，在单纯形外也非负。

    定义域取闭的非负象限：ω 按 0 log 0 = 0 连续延拓到边界，
    贪心策略与投影梯度迭代都会落在边界上。零分量处 ∇ω 为 −∞，
    grad_omega 在 LOG_FLOOR 处截断；参考点的零分量由 divergence 单独拒绝。
    """

    kind = "entropy"
    norm_order = 1

    def _check(self, a) -> np.ndarray:
        """允许零分量，拒绝负分量"""
        a = self._as_action(a)
        if np.any(a < 0):
            raise GeometryDomainError("Entropy 几何要求动作分量非负")
        return a

    def omega(self, a):
        a = self._check(a)
        return _reduce(xlogy(a, a))

    def grad_omega(self, a):
        a = self._check(a)
        return 1.0 + np.log(np.maximum(a, LOG_FLOOR))

    def divergence(self, a_ref, a, clip: bool = False):
        a_ref = self._check(a_ref)
        a = self._check(a)
        if not clip and np.any((a_ref <= 0) & (a > 0)):
            raise GeometryDomainError("参考点存在零分量，KL 为 +∞")
        return _reduce(kl_div(a, np.maximum(a_ref, LOG_FLOOR)))


class EuclideanGeometry(BaseGeometryOperator):
    """欧氏几何，定义域为整个空间"""

    kind = "euclidean"
    norm_order = 2

    def omega(self, a):
        a = self._as_action(a)
        return _reduce(0.5 * a * a)

    def grad_omega(self, a):
        return self._as_action(a).copy()

    def divergence(self, a_ref, a, clip: bool = False):
        diff = self._as_action(a) - self._as_action(a_ref)
        return _reduce(0.5 * diff * diff)

    def center(self) -> np.ndarray:
        return np.zeros(self.action_dim)


class NegTsallisGeometry(BaseGeometryOperator):
    """
    负 Tsallis 熵几何

    乘以 1/q 的缩放使得 ω 的 Hessian 对角元 a_i^{q−2} ≥ 1（a_i ≤ 1，q < 2），
    即在单纯形上关于 ℓ2 范数 1-强凸。
    """

    kind = "tsallis"
    norm_order = 2

    def __init__(self, config: Dict[str, Any] = None):
        super().__init__(config)
        self.q = float(self.config.get("q", 0.5))
        if not (0.0 < self.q < 2.0) or self.q == 1.0:
            raise ValueError(f"Tsallis 参数 q 必须在 (0, 2) 内且不等于 1，实际为 {self.q}")

    def _check(self, a) -> np.ndarray:
        a = self._as_action(a)
        if np.any(a < 0):
            raise GeometryDomainError("Tsallis 几何要求动作分量非负")
        return a

    def omega(self, a):
        a = self._check(a)
        q = self.q
        value = (1.0 - np.sum(a ** q, axis=-1)) / (q * (1.0 - q))
        return float(value) if np.ndim(value) == 0 else value

    def grad_omega(self, a):
        a = self._check(a)
        q = self.q
        base = np.maximum(a, LOG_FLOOR) if q < 1.0 else a
        return -(base ** (q - 1.0)) / (1.0 - q)

    def divergence(self, a_ref, a, clip: bool = False):
        a_ref = self._check(a_ref)
        a = self._check(a)
        if self.q < 1.0 and not clip and np.any(a_ref <= 0):
            raise GeometryDomainError("Tsallis（q<1）要求参考点严格为正")
        grad_ref = self.grad_omega(a_ref)
        value = self.omega(a) - self.omega(a_ref) - np.sum(grad_ref * (a - a_ref), axis=-1)
        value = np.maximum(value, 0.0)
        return float(value) if np.ndim(value) == 0 else value

    def inverse_grad(self, y: np.ndarray) -> np.ndarray:
        """
        (∇ω)^{-1}，用于对偶二分

        q < 1 时要求 y < 0；q > 1 时 y ≤ 0 映射到边界 0。
        """
        q = self.q
        if q < 1.0:
            return (-(1.0 - q) * y) ** (1.0 / (q - 1.0))
        return np.maximum((q - 1.0) * y, 0.0) ** (1.0 / (q - 1.0))
