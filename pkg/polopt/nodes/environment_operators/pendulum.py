"""
倒立摆

θ̈ = (g/l) sin θ + u/(m l²)，半隐式欧拉积分，θ̇ 上带 N(0, noise_std²) 过程噪声。
|θ| > π/2 视为倒下，进入吸收态（每步代价 2）；保持平衡时代价为 0。
环境原生得分是平衡步数的相反数。
"""

from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from ..geometry_operators import BoxSet
from .base import BaseEnvironment

FALL_COST = 2.0


@dataclass(frozen=True)
class PendulumSpec:
    mass: float = 1.0
    length: float = 1.0
    gravity: float = 9.81
    dt: float = 0.02
    torque_limit: float = 3.0
    noise_std: float = 0.01
    init_scale: float = 0.05
    step_cap: int = 1000
    gamma: float = 0.99

    def __post_init__(self):
        if self.dt <= 0 or self.mass <= 0 or self.length <= 0:
            raise ValueError("dt、mass、length 必须为正")

    @classmethod
    def from_config(cls, config: Dict[str, Any] = None) -> "PendulumSpec":
        config = config or {}
        defaults = cls()
        return cls(**{
            key: type(getattr(defaults, key))(config.get(key, getattr(defaults, key)))
            for key in cls.__dataclass_fields__
        })


def pendulum_step(spec: PendulumSpec, state, u, rng: np.random.Generator) -> Tuple[Tuple[float, float, int], float]:
    """
    单步转移

    Returns:
        ((θ', θ̇', fallen'), c(state, u))
    """
    theta, omega, fallen = state
    if fallen:
        return (theta, omega, 1), FALL_COST
    torque = float(np.clip(np.asarray(u, dtype=float).ravel()[0], -spec.torque_limit, spec.torque_limit))
    accel = spec.gravity / spec.length * np.sin(theta) + torque / (spec.mass * spec.length ** 2)
    omega = omega + spec.dt * accel + (spec.noise_std * rng.standard_normal() if spec.noise_std > 0 else 0.0)
    theta = theta + spec.dt * omega
    return (float(theta), float(omega), int(abs(theta) > np.pi / 2)), 0.0


class PendulumEnvironment(BaseEnvironment):
    """倒立摆环境，动作集合为 Box [−3, 3]"""

    def __init__(self, config: Dict[str, Any] = None):
        config = dict(config or {})
        self.spec = PendulumSpec.from_config(config)
        config["gamma"] = self.spec.gamma
        config["c_bar"] = FALL_COST
        super().__init__(config)
        limit = self.spec.torque_limit
        self.action_set = BoxSet({"lower": [-limit], "upper": [limit]})

    def reset(self, rng: np.random.Generator):
        theta, omega = rng.uniform(-self.spec.init_scale, self.spec.init_scale, size=2)
        return (float(theta), float(omega), 0)

    def sample_transition(self, state, action, rng: np.random.Generator):
        return pendulum_step(self.spec, state, action, rng)[0]

    def cost(self, state, action) -> float:
        return FALL_COST if state[2] else 0.0

    def step(self, state, action, rng: np.random.Generator):
        return pendulum_step(self.spec, state, action, rng)

    def embed(self, state) -> np.ndarray:
        theta, omega, _ = state
        return np.array([theta, omega])

    def is_absorbing(self, state) -> bool:
        return bool(state[2])

    def absorbing_value(self, state) -> float:
        return FALL_COST / (1.0 - self.gamma)

    def episode_score(self, costs: Sequence[float]) -> float:
        """−(平衡步数)，最多 step_cap 步"""
        costs = np.asarray(costs, dtype=float)[: self.spec.step_cap]
        return -float(np.sum(costs == 0.0))
