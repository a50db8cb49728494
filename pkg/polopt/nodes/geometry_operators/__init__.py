"""
Geometry Operators 包

1. Bregman 几何（Entropy / Euclidean / NegTsallis）
2. 正则项（Null / KlToAnchor / Quadratic / ConcaveQuadratic）
3. 动作集合（Simplex / Box / Polyhedral）
4. 近端子问题求解（闭式解、对偶二分、加速投影梯度）
"""

from .base import BaseGeometryOperator, BaseRegularizer, BaseActionSet
from .bregman import EntropyGeometry, EuclideanGeometry, NegTsallisGeometry, LOG_FLOOR
from .regularizers import (
    NullRegularizer,
    KlToAnchorRegularizer,
    QuadraticRegularizer,
    ConcaveQuadraticRegularizer,
    resolve_anchor,
)
from .action_sets import SimplexSet, BoxSet, PolyhedralSet, project_simplex
from .prox import (
    entropy_prox,
    euclidean_prox,
    tsallis_prox,
    prox_simplex_entropy,
    prox_generic,
    bregman_prox,
    generic_bregman_prox,
    omega_prox,
)

__all__ = [
    "BaseGeometryOperator",
    "BaseRegularizer",
    "BaseActionSet",
    "EntropyGeometry",
    "EuclideanGeometry",
    "NegTsallisGeometry",
    "LOG_FLOOR",
    "NullRegularizer",
    "KlToAnchorRegularizer",
    "QuadraticRegularizer",
    "ConcaveQuadraticRegularizer",
    "resolve_anchor",
    "SimplexSet",
    "BoxSet",
    "PolyhedralSet",
    "project_simplex",
    "entropy_prox",
    "euclidean_prox",
    "tsallis_prox",
    "prox_simplex_entropy",
    "prox_generic",
    "bregman_prox",
    "generic_bregman_prox",
    "omega_prox",
]
