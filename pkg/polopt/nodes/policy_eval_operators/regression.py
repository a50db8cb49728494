"""
回归 Operators

1. fit_ridge: θ = argmin Σ_i (Q̃(z_i; θ) − y_i)² + λ‖θ‖²
2. fit_augmented_L: Q̃ 分量与 ∇̃ω 分量分别回归，分开存储
3. QModel: 线性模型的求值（含动作梯度）
"""

from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
from sklearn.linear_model import Ridge

from .base import BaseFeatureMap
from .features import KernelAnchorFeatures, StateFeatures
from .sampling import EvalDataset

NORMAL_EQ_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class QModel:
    """
    线性函数逼近模型

    Attributes:
        theta: 权重
        feature_map: 特征映射
        env: 用于编码输入的环境
        target_kind: "q" 或 "augmented_l"
        omega_coef: ∇̃ω 分量的系数（状态特征 × 动作维度）
        omega_map: ∇̃ω 分量的状态特征
    """

    theta: np.ndarray
    feature_map: BaseFeatureMap
    env: Any = None
    target_kind: str = "q"
    omega_coef: Optional[np.ndarray] = None
    omega_map: Optional[StateFeatures] = None

    def predict(self, Z: np.ndarray) -> np.ndarray:
        return self.feature_map.transform(Z) @ self.theta

    def value(self, state, action) -> float:
        """Q̃(s, a; θ)"""
        return float(self.predict(self.feature_map.encode(self.env, [state], [action]))[0])

    def q0(self, state) -> np.ndarray:
        """有限动作：Q̃_0(s; θ) 按动作排列"""
        n_a = self.env.n_actions
        return self.predict(self.feature_map.encode(self.env, [state] * n_a, np.arange(n_a)))

    def q0_table(self, states: Sequence) -> np.ndarray:
        """批量 Q̃_0，形状 [len(states) × n_A]"""
        n_a = self.env.n_actions
        states = list(states)
        Z = self.feature_map.encode(
            self.env, [s for s in states for _ in range(n_a)], np.tile(np.arange(n_a), len(states))
        )
        return self.predict(Z).reshape(len(states), n_a)

    def omega_term(self, state) -> np.ndarray:
        """∇̃ω(s)（没有该分量时为 0）"""
        if self.omega_coef is None:
            return np.zeros(self.env.action_dim)
        phi = self.omega_map.transform(self.omega_map.encode(self.env, [state]))
        return (phi @ self.omega_coef)[0]

    def omega_table(self, states: Sequence) -> np.ndarray:
        if self.omega_coef is None:
            return np.zeros((len(states), self.env.action_dim))
        return self.omega_map.transform(self.omega_map.encode(self.env, list(states))) @ self.omega_coef

    def l0(self, state) -> np.ndarray:
        """L̃_0(s) = Q̃_0(s) − ∇̃ω(s)"""
        return self.q0(state) - self.omega_term(state)

    def action_gradient(self, state, action) -> np.ndarray:
        """连续动作：∇_a Q̃(s, a; θ)（核锚点特征的解析梯度）"""
        if not isinstance(self.feature_map, KernelAnchorFeatures):
            raise ValueError("动作梯度只支持核锚点特征")
        z = self.feature_map.encode(self.env, [state], [action])[0]
        w = self.feature_map.primal_weights(self.theta)
        grad = self.feature_map.input_gradient(z, w)
        return grad[-self.env.action_dim:]

    def scaled(self, weight: float) -> "QModel":
        return QModel(self.theta * weight, self.feature_map, self.env, self.target_kind,
                      None if self.omega_coef is None else self.omega_coef * weight, self.omega_map)


def evaluate_model(model: QModel, state, action) -> float:
    """Q̃(s, a; θ)"""
    return model.value(state, action)


def _ridge(Phi: np.ndarray, Y: np.ndarray, ridge_lambda: float, verbose: bool = False) -> np.ndarray:
    """Ridge 闭式解，检查正规方程残差，奇异时增大 λ 重试"""
    lam = float(ridge_lambda)
    for _ in range(8):
        try:
            coef = Ridge(alpha=lam, fit_intercept=False, solver="cholesky").fit(Phi, Y).coef_.T
        except np.linalg.LinAlgError:
            coef = None
        if coef is not None and np.all(np.isfinite(coef)):
            gram_coef = Phi.T @ (Phi @ coef) + lam * coef
            rhs = Phi.T @ Y
            residual = float(np.max(np.abs(gram_coef - rhs))) if rhs.size else 0.0
            scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 1.0)
            if residual <= NORMAL_EQ_TOL * scale:
                return coef
        lam = max(lam * 10.0, 1e-10)
        print(f"⚠️  Gram 矩阵接近奇异，λ 增大到 {lam:.3e} 后重试")
    raise np.linalg.LinAlgError("ridge 回归在多次 λ 增大后仍失败")


def encode_dataset(dataset: EvalDataset, fmap: BaseFeatureMap, env) -> np.ndarray:
    if dataset.inputs is not None:
        return dataset.inputs
    return fmap.encode(env, dataset.states, dataset.actions)


def fit_ridge(
    dataset: EvalDataset,
    fmap: BaseFeatureMap,
    ridge_lambda: Optional[float] = None,
    env=None,
) -> QModel:
    """
    ridge 回归

    Args:
        dataset: 评估数据集
        fmap: 特征映射（未拟合时用本数据集确定锚点）
        ridge_lambda: λ，默认 1e-3·N
        env: 用于编码输入的环境

    Returns:
        QModel
    """
    Z = encode_dataset(dataset, fmap, env)
    if not fmap.is_fitted:
        fmap.fit(Z)
    lam = 1e-3 * len(dataset) if ridge_lambda is None else float(ridge_lambda)
    theta = _ridge(fmap.transform(Z), dataset.targets, lam)
    return QModel(theta=np.asarray(theta, dtype=float), feature_map=fmap, env=env, target_kind="q")


def fit_augmented_L(
    dataset: EvalDataset,
    policy,
    geom,
    eta: float,
    fmap: BaseFeatureMap,
    state_fmap: Optional[StateFeatures] = None,
    ridge_lambda: Optional[float] = None,
    env=None,
) -> QModel:
    """
    拟合 L̃ = Q̃ − ⟨∇̃ω(s), a⟩

    Q̃ 分量用数据集的 Q 目标回归；∇̃ω 分量在访问过的状态上回归精确目标 ∇ω(π_k(s))/η_k。

    Args:
        dataset: Q 目标数据集
        policy: π_k（state -> 动作或单纯形行）
        geom: Bregman 几何
        eta: 步长 η_k
        fmap: 状态-动作特征
        state_fmap: 状态特征（默认与 fmap 同类）
        ridge_lambda: λ
        env: 环境

    Returns:
        target_kind = "augmented_l" 的 QModel
    """
    q_model = fit_ridge(dataset, fmap, ridge_lambda, env)
    state_fmap = state_fmap or StateFeatures.like(fmap)
    states = list(dict.fromkeys(dataset.states)) if _hashable(dataset.states) else list(dataset.states)
    Zs = state_fmap.encode(env, states)
    if not state_fmap.is_fitted:
        state_fmap.fit(Zs)
    targets = np.stack([geom.grad_omega(np.clip(policy(s), 1e-300, None) if env.finite_actions else policy(s))
                        for s in states]) / eta
    lam = 1e-3 * len(states) if ridge_lambda is None else float(ridge_lambda)
    omega_coef = _ridge(state_fmap.transform(Zs), targets, lam)
    return QModel(
        theta=q_model.theta,
        feature_map=fmap,
        env=env,
        target_kind="augmented_l",
        omega_coef=np.asarray(omega_coef, dtype=float).reshape(-1, targets.shape[1]),
        omega_map=state_fmap,
    )


def _hashable(items) -> bool:
    try:
        set(items)
        return True
    except TypeError:
        return False
