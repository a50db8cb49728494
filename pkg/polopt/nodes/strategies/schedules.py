"""
步长策略 (Stepsize Schedules)

PMD 与 PDA 共用的中层策略：
- CurvatureSpec: 曲率常数 μ_h、μ_Q、μ_d = μ_h − μ_Q、μ̃_d 以及 Lipschitz 常数
- PmdSchedule: η_k（加权版本还有 β_k）
- PdaSchedule: β_k、λ_k

每个策略在构造时按声明的迭代步数（默认窗口 200 步）检查收敛条件，
不满足时抛出 ScheduleError，其中 rule 为规则名，inequality 为被违反的不等式。

规则名：
- curvature_step: μ_d + 1/η_k ≥ 0
- weighted_step: β_k/η_k ≤ β_{k−1}(μ_d + 1/η_{k−1})
- dual_curvature: μ_k = μ_d Σ_{t≤k} β_t + λ_k ≥ 0
- strong_convexity: μ_k > 0
- lambda_monotone: λ_{k+1} ≥ λ_k
- parameter: 参数本身不合法
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..errors import ScheduleError

DEFAULT_WINDOW = 200
RULE_TOL = 1e-12


@dataclass(frozen=True)
class CurvatureSpec:
    """
    曲率常数（由用户声明，不做估计）

    Attributes:
        mu_h: h 的强凸模（弱凸时为负）
        mu_Q: Q 关于动作的弱凸模（表格有限动作时为 0）
        mu_tilde_d: 函数逼近情形的 μ̃_d，未给出时取 μ_d
        M_Q / M_tilde_Q / M_h: Lipschitz 常数
    """

    mu_h: float = 0.0
    mu_Q: float = 0.0
    mu_tilde_d: Optional[float] = None
    M_Q: float = 0.0
    M_tilde_Q: float = 0.0
    M_h: float = 0.0

    @property
    def mu_d(self) -> float:
        return self.mu_h - self.mu_Q

    @property
    def effective_mu_d(self) -> float:
        return self.mu_d if self.mu_tilde_d is None else float(self.mu_tilde_d)

    @classmethod
    def from_config(cls, config: Dict[str, Any] = None, regularizer=None) -> "CurvatureSpec":
        """mu_h / M_h 缺省时取正则项的声明值"""
        config = config or {}
        mu_h = config.get("mu_h", regularizer.mu_h if regularizer is not None else 0.0)
        M_h = config.get("M_h", regularizer.lipschitz if regularizer is not None else 0.0)
        mu_tilde_d = config.get("mu_tilde_d")
        return cls(
            mu_h=float(mu_h),
            mu_Q=float(config.get("mu_Q", 0.0)),
            mu_tilde_d=None if mu_tilde_d is None else float(mu_tilde_d),
            M_Q=float(config.get("M_Q", 0.0)),
            M_tilde_Q=float(config.get("M_tilde_Q", 0.0)),
            M_h=float(M_h),
        )


def _require(condition: bool, inequality: str, detail: str = ""):
    if not condition:
        raise ScheduleError("parameter", inequality, detail=detail)


class PmdSchedule:
    """
    PMD 步长策略

    kind:
    - geometric: η_k = γ^{-k}
    - constant: η_k = η
    - nonconvex: η = 1/(2|μ_d|)
    - sqrt_horizon: η = √(D0 / (k[(c̄/(1−γ) + M_h)² + σ²]))，k 为预先固定的步数
    - inverse_t: η_t = 1/(μ_h(t+1))，β_t = 1
    - inverse_t_weighted: η_t = 2/(μ_h(t+1))，β_t = t + 2
    - continuous_nonconvex: η = min{|μ̃_d|/2, 1/√k}
    """

    KINDS = (
        "geometric", "constant", "nonconvex", "sqrt_horizon",
        "inverse_t", "inverse_t_weighted", "continuous_nonconvex",
    )
    WEIGHTED = ("inverse_t", "inverse_t_weighted")

    def __init__(self, config: Dict[str, Any] = None, curvature: Optional[CurvatureSpec] = None):
        """
        初始化 PMD 步长策略

        Args:
            config: 配置字典（kind / eta / gamma / horizon / D0 / c_bar / sigma2）
            curvature: 曲率常数
        """
        self.config = config or {}
        self.curvature = curvature or CurvatureSpec()
        self.kind = str(self.config.get("kind", "geometric")).lower()
        if self.kind not in self.KINDS:
            print(f"⚠️  未知的 PMD 步长策略: {self.kind}，使用默认 geometric")
            self.kind = "geometric"
        horizon = self.config.get("horizon")
        self.horizon = None if horizon is None else int(horizon)
        self.gamma = self.config.get("gamma")
        self._eta_const = self._resolve_constant()
        self.validate()

    def _resolve_constant(self) -> Optional[float]:
        mu = self.curvature.effective_mu_d
        if self.kind == "geometric":
            _require(self.gamma is not None and 0.0 < float(self.gamma) < 1.0, "0 < γ < 1",
                     "geometric 需要折扣因子 gamma")
            return None
        if self.kind == "constant":
            eta = float(self.config.get("eta", 1.0))
            _require(eta > 0, "η > 0")
            return eta
        if self.kind == "nonconvex":
            _require(mu < 0, "μ_d < 0", f"nonconvex 步长要求 μ_d < 0，实际为 {mu}")
            return 1.0 / (2.0 * abs(mu))
        if self.kind == "sqrt_horizon":
            _require(self.horizon is not None and self.horizon > 0, "k ≥ 1", "sqrt_horizon 需要预先给定 horizon")
            gamma = float(self.config.get("gamma", 0.9))
            c_bar = float(self.config.get("c_bar", 1.0))
            d0 = float(self.config.get("D0", 1.0))
            sigma2 = float(self.config.get("sigma2", 0.0))
            scale = (c_bar / (1.0 - gamma) + self.curvature.M_h) ** 2 + sigma2
            _require(d0 > 0 and scale > 0, "D0 > 0")
            return float(np.sqrt(d0 / (self.horizon * scale)))
        if self.kind in self.WEIGHTED:
            mu_h = self.curvature.mu_h
            _require(mu_h > 0, "μ_h > 0", f"{self.kind} 要求 μ_h > 0，实际为 {mu_h}")
            return None
        # continuous_nonconvex
        _require(mu < 0, "μ̃_d < 0", f"continuous_nonconvex 要求 μ̃_d < 0，实际为 {mu}")
        _require(self.horizon is not None and self.horizon > 0, "k ≥ 1",
                 "continuous_nonconvex 需要预先给定 horizon")
        return float(min(abs(mu) / 2.0, 1.0 / np.sqrt(self.horizon)))

    def eta(self, k: int) -> float:
        """第 k 步的 η_k"""
        if self.kind == "geometric":
            return float(self.gamma) ** (-k)
        if self.kind == "inverse_t":
            return 1.0 / (self.curvature.mu_h * (k + 1))
        if self.kind == "inverse_t_weighted":
            return 2.0 / (self.curvature.mu_h * (k + 1))
        return self._eta_const

    def beta(self, k: int) -> float:
        """加权平均用的 β_k"""
        if self.kind == "inverse_t_weighted":
            return float(k + 2)
        return 1.0

    @property
    def window(self) -> int:
        return self.horizon or DEFAULT_WINDOW

    def validate(self):
        """检查 μ_d + 1/η_k ≥ 0，加权策略还要检查 β_k/η_k ≤ β_{k−1}(μ_d + 1/η_{k−1})"""
        mu = self.curvature.effective_mu_d
        for k in range(self.window):
            if mu + 1.0 / self.eta(k) < -RULE_TOL:
                raise ScheduleError(
                    "curvature_step", "μ_d + 1/η_k ≥ 0", k,
                    f"μ_d = {mu:.6g}, η_k = {self.eta(k):.6g}",
                )
            if self.kind in self.WEIGHTED and k > 0:
                lhs = self.beta(k) / self.eta(k)
                rhs = self.beta(k - 1) * (mu + 1.0 / self.eta(k - 1))
                if lhs > rhs * (1.0 + 1e-12) + RULE_TOL:
                    raise ScheduleError(
                        "weighted_step", "β_k/η_k ≤ β_{k−1}(μ_d + 1/η_{k−1})", k,
                        f"{lhs:.6g} > {rhs:.6g}",
                    )

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "horizon": self.horizon, "eta_0": self.eta(0), "mu_d": self.curvature.effective_mu_d}

    def __repr__(self) -> str:
        return f"PmdSchedule(kind={self.kind}, config={self.config})"


class PdaSchedule:
    """
    PDA 步长策略

    kind:
    - geometric: β_k = γ^{-k}，λ_k = λ ≥ 0
    - linear_beta_const_lambda: β_k = k + 1，λ_k = λ（默认 μ_d）
    - linear_beta_poly_lambda: β_k = k + 1，λ_k = λ(k+1)^{3/2}，
      λ 缺省时取 √(2 D0) / √((c̄/(1−γ) + M_h)² + σ²)
    - nonconvex: β_t = t + 1，λ = k(k+1)|μ_d|，k 为预先固定的步数
    """

    KINDS = ("geometric", "linear_beta_const_lambda", "linear_beta_poly_lambda", "nonconvex")

    def __init__(self, config: Dict[str, Any] = None, curvature: Optional[CurvatureSpec] = None):
        """
        初始化 PDA 步长策略

        Args:
            config: 配置字典（kind / lam / gamma / horizon / D0 / c_bar / sigma2）
            curvature: 曲率常数
        """
        self.config = config or {}
        self.curvature = curvature or CurvatureSpec()
        self.kind = str(self.config.get("kind", "geometric")).lower()
        if self.kind not in self.KINDS:
            print(f"⚠️  未知的 PDA 步长策略: {self.kind}，使用默认 geometric")
            self.kind = "geometric"
        horizon = self.config.get("horizon")
        self.horizon = None if horizon is None else int(horizon)
        self.gamma = self.config.get("gamma")
        self.lam_base = self._resolve_lambda()
        self._beta_prefix = np.cumsum([self.beta(k) for k in range(self.window + 1)])
        self.validate()

    def _resolve_lambda(self) -> float:
        mu = self.curvature.effective_mu_d
        lam = self.config.get("lam")
        if self.kind == "geometric":
            _require(self.gamma is not None and 0.0 < float(self.gamma) < 1.0, "0 < γ < 1",
                     "geometric 需要折扣因子 gamma")
            lam = float(lam if lam is not None else 0.0)
        elif self.kind == "linear_beta_const_lambda":
            lam = float(lam if lam is not None else mu)
        elif self.kind == "linear_beta_poly_lambda":
            if lam is None:
                gamma = float(self.config.get("gamma", 0.9))
                c_bar = float(self.config.get("c_bar", 1.0))
                d0 = float(self.config.get("D0", 1.0))
                sigma2 = float(self.config.get("sigma2", 0.0))
                scale = (c_bar / (1.0 - gamma) + self.curvature.M_h) ** 2 + sigma2
                _require(d0 > 0 and scale > 0, "D0 > 0")
                lam = np.sqrt(2.0 * d0) / np.sqrt(scale)
            lam = float(lam)
        else:
            _require(mu < 0, "μ_d < 0", f"nonconvex 要求 μ_d < 0，实际为 {mu}")
            _require(self.horizon is not None and self.horizon > 0, "k ≥ 1", "nonconvex 需要预先给定 horizon")
            lam = float(self.horizon * (self.horizon + 1) * abs(mu))
        _require(lam >= 0, "λ ≥ 0", f"λ = {lam}")
        return lam

    @property
    def window(self) -> int:
        return self.horizon or DEFAULT_WINDOW

    def beta(self, k: int) -> float:
        if self.kind == "geometric":
            return float(self.gamma) ** (-k)
        return float(k + 1)

    def lam(self, k: int) -> float:
        """λ_k（k < 0 时取 λ_0）"""
        k = max(k, 0)
        if self.kind == "linear_beta_poly_lambda":
            return self.lam_base * (k + 1) ** 1.5
        return self.lam_base

    def lam_prev(self, k: int) -> float:
        """λ_{k−1}，约定 λ_{−1} = λ_0"""
        return self.lam(k - 1)

    def beta_sum(self, k: int) -> float:
        """Σ_{t≤k} β_t"""
        if k < len(self._beta_prefix):
            return float(self._beta_prefix[k])
        return float(sum(self.beta(t) for t in range(k + 1)))

    def mu(self, k: int) -> float:
        """μ_k = μ_d Σ_{t≤k} β_t + λ_k"""
        return self.curvature.effective_mu_d * self.beta_sum(k) + self.lam(k)

    def validate(self):
        """检查 μ_k ≥ 0、μ_k > 0 与 λ_{k+1} ≥ λ_k"""
        for k in range(self.window):
            mu_k = self.mu(k)
            if mu_k < -RULE_TOL:
                raise ScheduleError(
                    "dual_curvature", "μ_d Σ_{t≤k} β_t + λ_k ≥ 0", k, f"μ_k = {mu_k:.6g}",
                )
            if mu_k <= RULE_TOL:
                raise ScheduleError(
                    "strong_convexity", "μ_d Σ_{t≤k} β_t + λ_k > 0", k,
                    "子问题不是强凸的，请使用强凸正则或 λ > 0",
                )
            if self.lam(k + 1) < self.lam(k) - RULE_TOL:
                raise ScheduleError("lambda_monotone", "λ_{k+1} ≥ λ_k", k)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "horizon": self.horizon, "lambda_0": self.lam(0), "mu_d": self.curvature.effective_mu_d}

    def __repr__(self) -> str:
        return f"PdaSchedule(kind={self.kind}, config={self.config})"
