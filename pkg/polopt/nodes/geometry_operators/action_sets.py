"""
动作集合 Operators

1. Simplex: 有限动作的概率单纯形
2. Box: 逐分量上下界
3. Polyhedral: {x : A x = b, x ≥ 0}
"""

from typing import Any, Dict

import numpy as np
from scipy.optimize import minimize

from .base import BaseActionSet


def project_simplex(v: np.ndarray) -> np.ndarray:
    """
    欧氏投影到概率单纯形（排序算法，O(n log n)）

    支持按行批量投影：输入形状为 (n,) 或 (m, n)。
    """
    v = np.asarray(v, dtype=float)
    rows = np.atleast_2d(v)
    n = rows.shape[1]
    u = -np.sort(-rows, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    positive = u - css / ind > 0
    rho = n - 1 - np.argmax(positive[:, ::-1], axis=1)
    theta = css[np.arange(rows.shape[0]), rho] / (rho + 1.0)
    w = np.maximum(rows - theta[:, None], 0.0)
    return w[0] if v.ndim == 1 else w


class SimplexSet(BaseActionSet):
    """
    概率单纯形 Δ_n

    Config:
        n_actions: 顶点个数
    """

    kind = "simplex"
    finite = True

    def __init__(self, config: Dict[str, Any] = None):
        super().__init__(config)
        self.n_actions = int(self.config.get("n_actions", 2))
        if self.n_actions < 1:
            raise ValueError("单纯形顶点数必须为正")

    @property
    def dim(self) -> int:
        return self.n_actions

    def project(self, v):
        return project_simplex(v)

    def contains(self, a, tol: float = 1e-12) -> bool:
        a = np.asarray(a, dtype=float)
        return bool(np.all(a >= -tol) and np.all(np.abs(np.sum(a, axis=-1) - 1.0) <= tol))

    def sample_uniform(self, rng):
        return rng.dirichlet(np.ones(self.n_actions))

    def vertices(self) -> np.ndarray:
        return np.eye(self.n_actions)


class BoxSet(BaseActionSet):
    """
    盒约束 [lower, upper]

    Config:
        lower / upper: 向量或标量
        dim: 标量上下界时的维度
    """

    kind = "box"

    def __init__(self, config: Dict[str, Any] = None):
        super().__init__(config)
        lower = np.asarray(self.config.get("lower", -1.0), dtype=float)
        upper = np.asarray(self.config.get("upper", 1.0), dtype=float)
        dim = int(self.config.get("dim", max(lower.size, upper.size)))
        if lower.size not in (1, dim) or upper.size not in (1, dim):
            raise ValueError("Box 上下界维度不一致")
        self.lower = np.broadcast_to(lower.ravel(), (dim,)).astype(float)
        self.upper = np.broadcast_to(upper.ravel(), (dim,)).astype(float)
        if np.any(self.lower > self.upper):
            raise ValueError("Box 要求 lower ≤ upper")

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def project(self, v):
        return np.clip(np.asarray(v, dtype=float), self.lower, self.upper)

    def contains(self, a, tol: float = 1e-12) -> bool:
        a = np.asarray(a, dtype=float)
        return bool(np.all(a >= self.lower - tol) and np.all(a <= self.upper + tol))

    def sample_uniform(self, rng):
        return rng.uniform(self.lower, self.upper)


class PolyhedralSet(BaseActionSet):
    """
    多面体 {x : A x = b, x ≥ 0}

    投影是一个 QP，用 SLSQP 求解。
    """

    kind = "polyhedral"

    def __init__(self, config: Dict[str, Any] = None):
        super().__init__(config)
        self.A = np.atleast_2d(np.asarray(self.config.get("A"), dtype=float))
        self.b = np.atleast_1d(np.asarray(self.config.get("b"), dtype=float))
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("多面体约束 A 与 b 行数不一致")

    @property
    def dim(self) -> int:
        return int(self.A.shape[1])

    def project(self, v):
        v = np.asarray(v, dtype=float)
        result = minimize(
            lambda x: 0.5 * np.sum((x - v) ** 2),
            x0=np.maximum(v, 0.0),
            jac=lambda x: x - v,
            method="SLSQP",
            bounds=[(0.0, None)] * self.dim,
            constraints=[{"type": "eq", "fun": lambda x: self.A @ x - self.b, "jac": lambda x: self.A}],
            options={"ftol": 1e-15, "maxiter": 1000},
        )
        if not result.success:
            raise ValueError(f"多面体投影失败: {result.message}")
        return np.maximum(result.x, 0.0)

    def contains(self, a, tol: float = 1e-9) -> bool:
        a = np.asarray(a, dtype=float)
        return bool(np.all(a >= -tol) and np.all(np.abs(self.A @ a - self.b) <= tol))

    def sample_uniform(self, rng):
        raise ValueError("多面体不支持均匀采样，请改用 Simplex 或 Box")
