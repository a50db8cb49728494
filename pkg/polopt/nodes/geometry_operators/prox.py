"""
近端子问题求解 Operators

统一的每状态子问题：

    argmin_a  ⟨g, a⟩ + w_h · h^a(s) + τ · D(a_ref, a)

- PMD：w_h = 1，τ = 1/η_k，a_ref = π_k(s)
- PDA：w_h = Σβ_t，τ = λ_k，a_ref = π_0(s)
- 策略迭代：w_h = 1，τ = 0

求解方式：
1. Entropy + Null/KlToAnchor：闭式 softmax
2. Euclidean + Null/Quadratic/ConcaveQuadratic：投影到 Simplex 或截断到 Box
3. NegTsallis + Null：归一化乘子的一维对偶二分
4. 其他：加速投影梯度（带回溯线搜索）
"""

from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import softmax

from ..errors import ProxConvergenceError
from .action_sets import BoxSet, SimplexSet, project_simplex
from .base import BaseActionSet, BaseGeometryOperator, BaseRegularizer
from .bregman import LOG_FLOOR, EntropyGeometry, EuclideanGeometry, NegTsallisGeometry

Oracle = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def _greedy_vertex(g: np.ndarray) -> np.ndarray:
    """线性目标在单纯形上的极小点，平局取最小下标"""
    out = np.zeros_like(g)
    idx = np.argmin(g, axis=-1)
    np.put_along_axis(out, np.expand_dims(idx, -1), 1.0, axis=-1)
    return out


def entropy_prox(
    g: np.ndarray,
    a_ref: Optional[np.ndarray],
    tau: float,
    kl_weight: float = 0.0,
    anchor: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    argmin_{a∈Δ} ⟨g,a⟩ + kl_weight·KL(a‖anchor) + τ·KL(a‖a_ref)

    一阶条件给出 log a ∝ (τ log a_ref + kl_weight log anchor − g)/(τ + kl_weight)，
    按最后一维批量计算。
    """
    g = np.asarray(g, dtype=float)
    total = tau + kl_weight
    if total <= 0:
        return _greedy_vertex(g)
    logits = -g
    if tau > 0:
        logits = logits + tau * np.log(np.maximum(a_ref, LOG_FLOOR))
    if kl_weight > 0:
        logits = logits + kl_weight * np.log(np.maximum(anchor, LOG_FLOOR))
    return softmax(logits / total, axis=-1)


def prox_simplex_entropy(
    linear_term: np.ndarray,
    reg: BaseRegularizer,
    eta: float,
    a_ref: np.ndarray,
    state=None,
    h_weight: float = 1.0,
) -> np.ndarray:
    """
    Entropy 几何下的闭式近端映射

    argmin_{a∈Δ} {⟨g,a⟩ + h_weight·h^a(s) + (1/η)·KL(a‖a_ref)}

    Args:
        linear_term: 线性项 g（可按行批量）
        reg: Null 或 KlToAnchor
        eta: 步长 η > 0（η = inf 表示去掉近端项）
        a_ref: 参考点
        state: 状态下标（取按状态的锚点）
        h_weight: h 的权重

    Returns:
        单纯形上的点
    """
    if reg.kind not in ("null", "kl_to_anchor"):
        raise ValueError(f"Entropy 闭式解只支持 null / kl_to_anchor 正则，实际为 {reg.kind}")
    if not eta > 0:
        raise ValueError("步长 η 必须为正")
    tau = 0.0 if np.isinf(eta) else 1.0 / eta
    kl_weight = h_weight * reg.weight if reg.kind == "kl_to_anchor" else 0.0
    return entropy_prox(linear_term, a_ref, tau, kl_weight, reg.anchor_at(state))


def euclidean_prox(
    g: np.ndarray,
    action_set: BaseActionSet,
    tau: float,
    a_ref: Optional[np.ndarray],
    curvature: float = 0.0,
    anchor: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    argmin_a ⟨g,a⟩ + (curvature/2)‖a − anchor‖² + (τ/2)‖a − a_ref‖²

    目标是各向同性二次函数，极小点等于无约束极小点的投影。
    """
    g = np.asarray(g, dtype=float)
    total = tau + curvature
    if total < 0 or (total == 0 and curvature != 0):
        raise ValueError(f"子问题不是强凸的（τ + 曲率 = {total}）")
    if total == 0:
        if isinstance(action_set, SimplexSet):
            return _greedy_vertex(g)
        if isinstance(action_set, BoxSet):
            return np.where(g >= 0, action_set.lower, action_set.upper)
        raise ValueError("线性目标只在 Simplex / Box 上有闭式解")
    center = -g
    if tau > 0:
        center = center + tau * a_ref
    if curvature != 0:
        center = center + curvature * anchor
    return action_set.project(center / total)


def tsallis_prox(
    g: np.ndarray,
    geom: NegTsallisGeometry,
    tau: float,
    a_ref: np.ndarray,
    xtol: float = 1e-12,
) -> np.ndarray:
    """
    argmin_{a∈Δ} ⟨g,a⟩ + τ·D_q(a_ref, a)

    一阶条件 ∇ω(a) = ∇ω(a_ref) − (g + ν)/τ，对归一化乘子 ν 二分，
    使 Σ a_i(ν) = 1。Σ a_i(ν) 关于 ν 单调递减。
    """
    g = np.asarray(g, dtype=float)
    if g.ndim > 1:
        return np.stack([tsallis_prox(row, geom, tau, ref, xtol) for row, ref in zip(g, a_ref)])
    if tau <= 0:
        raise ValueError("Tsallis 近端映射要求 τ > 0")
    base = geom.grad_omega(a_ref) - g / tau

    def excess(nu: float) -> float:
        return float(np.sum(geom.inverse_grad(base - nu / tau)) - 1.0)

    edge = tau * np.max(base)
    if geom.q < 1.0:
        # a_i(ν) 仅在 ν > τ·base_i 时有定义，ν → edge⁺ 时总和趋于 +∞
        low_step = 1.0
        while excess(edge + low_step) < 0:
            low_step *= 0.5
        high_step = 1.0
        while excess(edge + high_step) > 0:
            high_step *= 2.0
        left, right = edge + low_step, edge + high_step
    else:
        # ν = edge 时所有分量为 0
        step = 1.0
        while excess(edge - step) < 0:
            step *= 2.0
        left, right = edge - step, edge
    nu = bisect(excess, left, right, xtol=xtol * max(1.0, abs(right)), maxiter=500)
    a = geom.inverse_grad(base - nu / tau)
    return a / np.sum(a)


def prox_generic(
    oracle: Oracle,
    action_set: BaseActionSet,
    mu: float,
    x0: Optional[np.ndarray] = None,
    tol: float = 1e-9,
    max_iter: int = 100000,
    lipschitz0: float = 1.0,
) -> np.ndarray:
    """
    加速投影梯度（带回溯线搜索与函数值重启）

    Args:
        oracle: 返回 (f(x), ∇f(x)) 的函数
        action_set: 可投影的动作集合
        mu: 强凸模 μ > 0（决定动量系数）
        x0: 初始点
        tol: 投影梯度映射范数阈值
        max_iter: 迭代上限

    Returns:
        满足 ‖G_L(x)‖ ≤ tol 的点

    Raises:
        ProxConvergenceError: 达到迭代上限
    """
    if mu <= 0:
        raise ValueError(f"prox_generic 要求 μ > 0，实际为 {mu}")
    x = action_set.project(np.zeros(action_set.dim) if x0 is None else np.asarray(x0, dtype=float))
    f_x, g_x = oracle(x)
    y, f_y, g_y = x, f_x, g_x
    L = max(lipschitz0, mu)
    best, best_res = x, np.inf

    for _ in range(max_iter):
        while True:
            x_new = action_set.project(y - g_y / L)
            f_new, g_new = oracle(x_new)
            d = x_new - y
            if f_new <= f_y + g_y @ d + 0.5 * L * (d @ d) + 1e-14 * max(1.0, abs(f_y)):
                break
            L *= 2.0

        residual = L * np.linalg.norm(x_new - action_set.project(x_new - g_new / L))
        if residual < best_res:
            best, best_res = x_new, residual
        if residual <= tol:
            return x_new

        q = np.sqrt(mu / L) if mu < L else 1.0
        momentum = (1.0 - q) / (1.0 + q)
        if f_new > f_x:
            y, f_y, g_y = x_new, f_new, g_new
        else:
            y = action_set.project(x_new + momentum * (x_new - x))
            f_y, g_y = oracle(y)
        x, f_x = x_new, f_new
        L = max(mu, 0.9 * L)

    raise ProxConvergenceError(
        f"prox_generic 在 {max_iter} 次迭代后未收敛（残差 {best_res:.3e}）",
        best=best,
        residual=float(best_res),
    )


def bregman_prox(
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    action_set: BaseActionSet,
    linear_term: np.ndarray,
    h_weight: float,
    prox_weight: float,
    a_ref: Optional[np.ndarray],
    state=None,
    tol: float = 1e-9,
) -> np.ndarray:
    """
    统一的每状态近端子问题

    argmin_a ⟨g,a⟩ + h_weight·h^a(s) + prox_weight·D(a_ref, a)

    g 可以是 (n_A,) 或 (n_S, n_A)；批量时 state 为对应的状态下标数组。
    """
    g = np.asarray(linear_term, dtype=float)
    tau = float(prox_weight)
    if tau < 0 or h_weight < 0:
        raise ValueError("近端权重与正则权重必须非负")

    if isinstance(geom, EntropyGeometry) and isinstance(action_set, SimplexSet) \
            and reg.kind in ("null", "kl_to_anchor"):
        kl_weight = h_weight * reg.weight if reg.kind == "kl_to_anchor" else 0.0
        return entropy_prox(g, a_ref, tau, kl_weight, reg.anchor_at(state))

    if isinstance(geom, EuclideanGeometry) and isinstance(action_set, (SimplexSet, BoxSet)) \
            and reg.kind in ("null", "quadratic", "concave_quadratic"):
        curvature = h_weight * reg.curvature
        anchor = reg.anchor_at(state)
        return euclidean_prox(g, action_set, tau, a_ref, curvature, anchor)

    if isinstance(geom, NegTsallisGeometry) and isinstance(action_set, SimplexSet) and reg.kind == "null":
        return tsallis_prox(g, geom, tau, a_ref)

    if g.ndim > 1:
        states = state if state is not None else [None] * g.shape[0]
        refs = a_ref if a_ref is not None else [None] * g.shape[0]
        return np.stack([
            bregman_prox(geom, reg, action_set, row, h_weight, tau, ref, s, tol)
            for row, ref, s in zip(g, refs, states)
        ])
    return generic_bregman_prox(geom, reg, action_set, g, h_weight, tau, a_ref, state, tol)


def generic_bregman_prox(
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    action_set: BaseActionSet,
    g: np.ndarray,
    h_weight: float,
    tau: float,
    a_ref: Optional[np.ndarray],
    state=None,
    tol: float = 1e-9,
) -> np.ndarray:
    """没有闭式解的情形：交给 prox_generic"""
    mu = h_weight * reg.mu_h + tau
    if mu <= 0:
        raise ValueError(f"子问题不是强凸的（μ = {mu}）")
    grad_ref = geom.grad_omega(a_ref) if tau > 0 else None

    def oracle(a: np.ndarray):
        value = g @ a + h_weight * reg.value(a, state)
        grad = g + h_weight * reg.grad(a, state)
        if tau > 0:
            value += tau * geom.divergence(a_ref, a, clip=True)
            grad = grad + tau * (geom.grad_omega(a) - grad_ref)
        return float(value), grad

    x0 = a_ref if a_ref is not None and action_set.contains(a_ref, 1e-9) else None
    return prox_generic(oracle, action_set, mu, x0=x0, tol=tol)


def omega_prox(
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    action_set: BaseActionSet,
    linear_term: np.ndarray,
    prox_weight: float,
    state=None,
    tol: float = 1e-9,
) -> np.ndarray:
    """
    argmin_a ⟨g,a⟩ + h^a(s) + τ·ω(a)

    利用 ⟨g,a⟩ + τω(a) = ⟨g − τ∇ω(c), a⟩ + τD(c, a) + const，c 为 geom.center()。
    """
    center = geom.center()
    tau = float(prox_weight)
    shifted = np.asarray(linear_term, dtype=float) - tau * geom.grad_omega(center)
    ref = np.broadcast_to(center, shifted.shape)
    return bregman_prox(geom, reg, action_set, shifted, 1.0, tau, ref, state, tol)
