"""
连续动作的函数逼近 PMD

π_{k+1}(s) = argmin_{a∈A} Q̃(s, a; θ_k) − ⟨∇̃ω(s), a⟩ + h^a(s) + (1/η_k) ω(a)

子问题在 μ̃_d + 1/η_k > 0 时强凸，用 prox_generic 求解到 1e-9。
平稳性残差在固定的探测状态上用拟合模型计算。
"""

from typing import Any, Dict, Optional

import numpy as np

from ..errors import ProxConvergenceError
from ..geometry_operators import BaseActionSet, BaseGeometryOperator, BaseRegularizer, prox_generic
from ..mdp_operators import stationarity_residual
from ..policy_eval_operators import QModel
from ..strategies import CurvatureSpec, PmdSchedule
from .base import BaseSolverOperator, SolverState


def pmd_step_continuous_fa(
    model: QModel,
    geom: BaseGeometryOperator,
    reg: BaseRegularizer,
    eta_k: float,
    s,
    action_set: BaseActionSet,
    mu_tilde_d: float = 0.0,
    tol: float = 1e-9,
    x0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    单个状态上的 π_{k+1}(s)

    Args:
        model: target_kind = "augmented_l" 的模型
        geom: Bregman 几何
        reg: 正则项
        eta_k: 步长
        s: 环境状态
        action_set: 动作集合
        mu_tilde_d: 声明的 μ̃_d
        tol: 投影梯度映射阈值
        x0: 初始点

    Returns:
        动作
    """
    tau = 1.0 / eta_k
    mu = tau + mu_tilde_d
    if mu <= 0:
        raise ValueError(f"子问题不是强凸的：μ̃_d + 1/η_k = {mu}")
    omega_s = model.omega_term(s)

    def oracle(a: np.ndarray):
        value = model.value(s, a) - omega_s @ a + float(reg.value(a)) + tau * float(geom.omega(a))
        grad = model.action_gradient(s, a) - omega_s + reg.grad(a) + tau * geom.grad_omega(a)
        return value, grad

    return prox_generic(oracle, action_set, mu, x0=x0, tol=tol)


class ConstantPolicy:
    """π_0(s) = a_0"""

    def __init__(self, action: np.ndarray):
        self.action = np.asarray(action, dtype=float)

    def __call__(self, s) -> np.ndarray:
        return self.action


def solve_or_best(solve, warned: list):
    """子问题未收敛时返回目前最好的点，只警告一次"""
    try:
        return solve()
    except ProxConvergenceError as err:
        if not warned:
            print(f"⚠️  子问题未收敛，使用残差 {err.residual:.3e} 的最好点")
            warned.append(True)
        return err.best


class ContinuousModelPolicy:
    """由 (θ_k, η_k) 隐式定义的连续动作策略"""

    def __init__(self, model: QModel, geom: BaseGeometryOperator, reg: BaseRegularizer, eta: float,
                 action_set: BaseActionSet, mu_tilde_d: float = 0.0, tol: float = 1e-9):
        self.model = model
        self.geom = geom
        self.reg = reg
        self.eta = float(eta)
        self.action_set = action_set
        self.mu_tilde_d = float(mu_tilde_d)
        self.tol = tol
        self._warned: list = []

    def __call__(self, s) -> np.ndarray:
        return solve_or_best(
            lambda: pmd_step_continuous_fa(self.model, self.geom, self.reg, self.eta, s,
                                           self.action_set, self.mu_tilde_d, self.tol),
            self._warned,
        )


def draw_probes(env, n_probes: int, rng: np.random.Generator) -> list:
    return [env.reset(rng) for _ in range(n_probes)]


class ContinuousPmdOperator(BaseSolverOperator):
    """
    连续动作 PMD 运行

    f 用 Monte Carlo 回合估计；探测状态上记录 −ψ̂ 的历史最小值与对应下标。
    """

    def __init__(
        self,
        env,
        evaluator,
        geom: BaseGeometryOperator,
        reg: BaseRegularizer,
        schedule: PmdSchedule,
        curvature: Optional[CurvatureSpec] = None,
        config: Dict[str, Any] = None,
        rng: Optional[np.random.Generator] = None,
        score_rng: Optional[np.random.Generator] = None,
        verbose: bool = False,
    ):
        super().__init__(geom, reg, config, verbose=verbose)
        if env.finite_actions:
            raise ValueError("ContinuousPmdOperator 只支持连续动作环境")
        self.env = env
        self.evaluator = evaluator
        self.schedule = schedule
        self.curvature = curvature or schedule.curvature
        self.rng = rng or np.random.default_rng(0)
        self.score_rng = score_rng or np.random.default_rng(1)
        self.tol = float(self.config.get("prox_tol", 1e-9))
        initial = self.config.get("initial_action")
        self.initial_action = env.action_set.project(
            np.zeros(env.action_dim) if initial is None else np.asarray(initial, dtype=float)
        )
        self.probe_states = draw_probes(env, int(self.config.get("n_probes", 16)), self.score_rng)
        self.trace.meta.update({"schedule": schedule.describe(), "mode": "continuous"})

    def _metrics(self, policy, bootstrap=None) -> Dict[str, float]:
        return self.score_metrics(self.evaluator, policy, self.score_rng, bootstrap)

    def initialize(self) -> SolverState:
        policy = ConstantPolicy(self.initial_action)
        return SolverState(k=0, policy=policy, info=self._metrics(policy))

    def iterate(self, state: SolverState) -> SolverState:
        self._tic()
        k = state.k
        eta = self.schedule.eta(k)
        dataset = self.evaluator.collect(state.policy, self.rng, bootstrap=state.value_estimate)
        model = self.evaluator.fit_augmented(dataset, state.policy, self.geom, eta)
        nxt = ContinuousModelPolicy(model, self.geom, self.reg, eta, self.env.action_set,
                                    self.curvature.effective_mu_d, self.tol)

        residual = stationarity_residual(state.policy, nxt, self.geom, self.reg,
                                         probes=self.probe_states, q_fn=model.value)
        previous = state.policy

        def value_estimate(s) -> float:
            return model.value(s, previous(s))

        info = self._metrics(nxt, value_estimate)
        info.update(self.psi_metrics(residual, k))
        info.update(env_steps=dataset.env_steps, wall_ms=self._toc())

        return SolverState(k=k + 1, policy=nxt, model=model, value_estimate=value_estimate, info=info)
