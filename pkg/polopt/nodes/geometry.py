"""
几何模块 (Geometry Module)

三层架构设计：
- 顶层：GeometryModule（几何模块）
- 中层：几何 / 正则 / 动作集合的组合
- 底层：Operators（具体的散度与近端子问题求解）

核心功能：
为 PMD 与 PDA 提供距离生成函数 ω、Bregman 散度 D、正则项 h，
以及每个状态上的近端子问题求解

主要技术：
1. Bregman 几何
   - Entropy: KL 散度，单纯形上的 softmax 闭式解
   - Euclidean: 平方距离，投影闭式解
   - NegTsallis: 对偶二分

2. 正则项
   - Null / KlToAnchor / Quadratic
   - ConcaveQuadratic（弱凸替身）

3. 子问题求解
   - 闭式解
   - 加速投影梯度（prox_generic）
"""

from typing import Any, Dict, Optional

import numpy as np

from .geometry_operators import (
    BaseActionSet,
    BaseGeometryOperator,
    BaseRegularizer,
    BoxSet,
    ConcaveQuadraticRegularizer,
    EntropyGeometry,
    EuclideanGeometry,
    KlToAnchorRegularizer,
    NegTsallisGeometry,
    NullRegularizer,
    PolyhedralSet,
    QuadraticRegularizer,
    SimplexSet,
    bregman_prox,
    omega_prox,
    prox_generic,
    prox_simplex_entropy,
)


def build_geometry(config: Dict[str, Any] = None, action_dim: Optional[int] = None) -> BaseGeometryOperator:
    """根据配置构建 Bregman 几何"""
    config = dict(config or {})
    if action_dim is not None:
        config["action_dim"] = action_dim
    kind = str(config.get("kind", "entropy")).lower()

    if kind == "entropy":
        return EntropyGeometry(config)
    elif kind == "euclidean":
        return EuclideanGeometry(config)
    elif kind in ("tsallis", "neg_tsallis"):
        return NegTsallisGeometry(config)
    else:
        print(f"⚠️  未知的几何: {kind}，使用默认 entropy")
        return EntropyGeometry(config)


def build_regularizer(config: Dict[str, Any] = None, action_dim: int = 2) -> BaseRegularizer:
    """根据配置构建正则项"""
    config = dict(config or {})
    kind = str(config.get("kind", "null")).lower()

    if kind == "null":
        return NullRegularizer(config)
    elif kind == "kl_to_anchor":
        return KlToAnchorRegularizer(config, action_dim)
    elif kind == "quadratic":
        return QuadraticRegularizer(config, action_dim)
    elif kind == "concave_quadratic":
        return ConcaveQuadraticRegularizer(config, action_dim)
    else:
        print(f"⚠️  未知的正则项: {kind}，使用默认 null")
        return NullRegularizer(config)


def build_action_set(config: Dict[str, Any] = None) -> BaseActionSet:
    """根据配置构建动作集合"""
    config = dict(config or {})
    kind = str(config.get("kind", "simplex")).lower()

    if kind == "simplex":
        return SimplexSet(config)
    elif kind == "box":
        return BoxSet(config)
    elif kind == "polyhedral":
        return PolyhedralSet(config)
    else:
        print(f"⚠️  未知的动作集合: {kind}，使用默认 simplex")
        return SimplexSet(config)


def divergence(geom: BaseGeometryOperator, a_ref, a, clip: bool = False):
    """D(a_ref, a)，第一个参数是参考点"""
    return geom.divergence(a_ref, a, clip=clip)


def bregman_diameter(
    geom: BaseGeometryOperator,
    action_set: BaseActionSet,
    anchor: Optional[np.ndarray] = None,
) -> float:
    """
    动作集合在 Bregman 散度下的直径 D̄_A

    - Euclidean + Box：½‖upper − lower‖²
    - 单纯形且给定锚点：max_s max_i D(anchor(s), e_i)（D(anchor, ·) 凸，极大值在顶点）
    - Euclidean + Simplex：1
    - 其他：+∞

    Args:
        geom: 几何
        action_set: 动作集合
        anchor: 参考策略（向量或按状态的矩阵）

    Returns:
        直径
    """
    if isinstance(geom, EuclideanGeometry) and isinstance(action_set, BoxSet):
        span = action_set.upper - action_set.lower
        return float(0.5 * span @ span)
    if isinstance(action_set, SimplexSet):
        if anchor is not None:
            rows = np.atleast_2d(anchor)
            vertices = action_set.vertices()
            return float(max(
                np.max(geom.divergence(np.broadcast_to(row, vertices.shape), vertices, clip=True))
                for row in rows
            ))
        if isinstance(geom, EuclideanGeometry):
            return 1.0
    return float("inf")


class GeometryModule:
    """
    几何模块（顶层）

    使用方式：
    1. 选择几何、正则项和动作集合
    2. 调用 prox 求解每个状态上的子问题

    Example:
        config = {
            "geometry": {"kind": "entropy"},
            "regularizer": {"kind": "kl_to_anchor", "weight": 0.1},
            "action_set": {"kind": "simplex", "n_actions": 4},
        }

        geometry = GeometryModule(config)
        a_next = geometry.prox(q_row, h_weight=1.0, prox_weight=1.0 / eta, a_ref=pi_row)
    """

    def __init__(self, config: Dict[str, Any] = None):
        """
        初始化几何模块

        Args:
            config: 配置字典
        """
        self.config = config or {}
        self.action_set = build_action_set(self.config.get("action_set"))
        self.geometry = build_geometry(self.config.get("geometry"), self.action_set.dim)
        self.regularizer = build_regularizer(self.config.get("regularizer"), self.action_set.dim)
        self.tol = float(self.config.get("tol", 1e-9))

    def divergence(self, a_ref, a, clip: bool = False):
        return self.geometry.divergence(a_ref, a, clip=clip)

    def prox(
        self,
        linear_term: np.ndarray,
        h_weight: float,
        prox_weight: float,
        a_ref: Optional[np.ndarray],
        state=None,
    ) -> np.ndarray:
        """
        求解 argmin_a ⟨g,a⟩ + h_weight·h^a(s) + prox_weight·D(a_ref, a)

        Args:
            linear_term: 线性项 g
            h_weight: 正则权重
            prox_weight: 近端权重
            a_ref: 参考点
            state: 状态下标

        Returns:
            子问题的解
        """
        return bregman_prox(
            self.geometry, self.regularizer, self.action_set,
            linear_term, h_weight, prox_weight, a_ref, state, self.tol,
        )

    def omega_prox(self, linear_term: np.ndarray, prox_weight: float, state=None) -> np.ndarray:
        """求解 argmin_a ⟨g,a⟩ + h^a(s) + prox_weight·ω(a)"""
        return omega_prox(
            self.geometry, self.regularizer, self.action_set,
            linear_term, prox_weight, state, self.tol,
        )

    def diameter(self, anchor: Optional[np.ndarray] = None) -> float:
        return bregman_diameter(self.geometry, self.action_set, anchor)

    def summary(self) -> Dict[str, Any]:
        """
        返回模块摘要信息

        Returns:
            摘要字典
        """
        return {
            "module": "GeometryModule",
            "geometry": self.geometry.name,
            "regularizer": self.regularizer.name,
            "action_set": self.action_set.name,
            "mu_h": self.regularizer.mu_h,
            "M_h": self.regularizer.lipschitz,
            "config": self.config,
        }


__all__ = [
    "GeometryModule",
    "build_geometry",
    "build_regularizer",
    "build_action_set",
    "divergence",
    "bregman_diameter",
    "prox_simplex_entropy",
    "prox_generic",
    "bregman_prox",
    "omega_prox",
]
