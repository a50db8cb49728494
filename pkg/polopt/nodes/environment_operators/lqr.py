"""
离散时间线性二次调节器 (LQR)

x' = A x + B u + w，w ~ N(0, noise_cov)
c(x, u) = min(xᵀQc x + uᵀRc u, c̄)

默认实例：4 维轻微不稳定的 A，2 个输入，Qc = I，Rc = 0.1 I，噪声 0.01 I，
动作集合 Box [−5, 5]²，c̄ = 1e3。
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import solve_discrete_are

from ..geometry_operators import BoxSet
from .base import BaseEnvironment


def _default_A() -> np.ndarray:
    return np.array([
        [1.02, 0.10, 0.00, 0.00],
        [0.00, 0.98, 0.10, 0.00],
        [0.00, 0.00, 1.01, 0.10],
        [0.05, 0.00, 0.00, 0.97],
    ])


def _default_B() -> np.ndarray:
    return np.array([
        [0.0, 0.0],
        [0.1, 0.0],
        [0.0, 0.0],
        [0.0, 0.1],
    ])


@dataclass(frozen=True, eq=False)
class LqrSpec:
    A: np.ndarray = field(default_factory=_default_A)
    B: np.ndarray = field(default_factory=_default_B)
    Qc: np.ndarray = field(default_factory=lambda: np.eye(4))
    Rc: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(2))
    noise_cov: np.ndarray = field(default_factory=lambda: 0.01 * np.eye(4))
    gamma: float = 0.95
    c_bar: float = 1e3
    action_bound: float = 5.0
    init_scale: float = 1.0

    def __post_init__(self):
        for name in ("A", "B", "Qc", "Rc", "noise_cov"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        n, m = self.B.shape
        if self.A.shape != (n, n) or self.Qc.shape != (n, n) or self.noise_cov.shape != (n, n):
            raise ValueError("A、Qc、noise_cov 必须是 n×n 矩阵，B 必须是 n×m 矩阵")
        if self.Rc.shape != (m, m):
            raise ValueError("Rc 必须是 m×m 矩阵")
        if not np.allclose(self.Rc, self.Rc.T):
            raise ValueError("Rc 必须对称")
        np.linalg.cholesky(self.Rc)
        if np.min(np.linalg.eigvalsh(0.5 * (self.Qc + self.Qc.T))) < -1e-12:
            raise ValueError("Qc 必须半正定")
        if np.min(np.linalg.eigvalsh(0.5 * (self.noise_cov + self.noise_cov.T))) < -1e-12:
            raise ValueError("noise_cov 必须半正定")

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]

    @classmethod
    def from_config(cls, config: Dict[str, Any] = None) -> "LqrSpec":
        config = config or {}
        kwargs = {k: config[k] for k in ("A", "B", "Qc", "Rc", "noise_cov") if k in config}
        if "noise_std" in config and "noise_cov" not in config:
            n = np.asarray(config.get("A", _default_A())).shape[0]
            kwargs["noise_cov"] = float(config["noise_std"]) ** 2 * np.eye(n)
        for key in ("gamma", "c_bar", "action_bound", "init_scale"):
            if key in config:
                kwargs[key] = float(config[key])
        return cls(**kwargs)


def lqr_step(spec: LqrSpec, x: np.ndarray, u: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """
    单步转移

    Returns:
        (x', c(x, u))
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    cost = min(float(x @ spec.Qc @ x + u @ spec.Rc @ u), spec.c_bar)
    noise = rng.multivariate_normal(np.zeros(spec.state_dim), spec.noise_cov) if np.any(spec.noise_cov) \
        else np.zeros(spec.state_dim)
    return spec.A @ x + spec.B @ u + noise, cost


def riccati_feedback(spec: LqrSpec) -> np.ndarray:
    """
    折扣 LQR 的最优反馈增益 K（u = −Kx，不考虑动作约束）

    折扣问题等价于 (√γA, √γB) 上的无折扣问题。
    """
    root = np.sqrt(spec.gamma)
    P = solve_discrete_are(root * spec.A, root * spec.B, spec.Qc, spec.Rc)
    return np.linalg.solve(spec.Rc + spec.gamma * spec.B.T @ P @ spec.B, spec.gamma * spec.B.T @ P @ spec.A)


class LqrEnvironment(BaseEnvironment):
    """LQR 环境，动作集合为 Box [−bound, bound]^m"""

    def __init__(self, config: Dict[str, Any] = None, spec: Optional[LqrSpec] = None):
        config = dict(config or {})
        self.spec = spec or LqrSpec.from_config(config)
        config["gamma"] = self.spec.gamma
        config["c_bar"] = self.spec.c_bar
        super().__init__(config)
        bound = self.spec.action_bound
        self.action_set = BoxSet({
            "lower": [-bound] * self.spec.input_dim,
            "upper": [bound] * self.spec.input_dim,
        })

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-self.spec.init_scale, self.spec.init_scale, size=self.spec.state_dim)

    def sample_transition(self, state, action, rng: np.random.Generator) -> np.ndarray:
        return lqr_step(self.spec, state, action, rng)[0]

    def cost(self, state, action) -> float:
        x, u = np.asarray(state, dtype=float), np.asarray(action, dtype=float)
        return min(float(x @ self.spec.Qc @ x + u @ self.spec.Rc @ u), self.spec.c_bar)

    def step(self, state, action, rng: np.random.Generator):
        return lqr_step(self.spec, state, action, rng)


def linear_feedback_cost(
    env: LqrEnvironment,
    K: np.ndarray,
    rng: np.random.Generator,
    n_rollouts: int = 200,
    horizon: int = 300,
) -> float:
    """u = clip(−Kx) 的折扣累计代价（Monte Carlo 估计）"""
    total = 0.0
    for _ in range(n_rollouts):
        x = env.reset(rng)
        discount = 1.0
        for _ in range(horizon):
            u = env.action_set.project(-K @ x)
            x, c = env.step(x, u, rng)
            total += discount * c
            discount *= env.gamma
    return total / n_rollouts
