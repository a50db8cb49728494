"""
策略评估模块 (Policy Evaluation Module)

三层架构设计：
- 顶层：PolicyEvalModule（策略评估模块）
- 中层：采样 → 拟合 → 诊断
- 底层：Operators（特征映射、采样协议、ridge 回归、误差分解）

核心功能：
为函数逼近版本的 PMD / PDA 在每次迭代提供 Q̃(s, a; θ_k)

主要技术：
1. 数据来源
   - Monte Carlo：burn-in 混合、均匀动作、截断回报 + bootstrap
   - exact：表格环境上 σ = 0 的精确目标

2. 函数类
   - 核锚点随机特征（中位数带宽）
   - 表格 one-hot

3. 误差诊断
   - 重新采样估计 ς̂、σ̂²，拆分 δ^app 与 δ^bia
"""

from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .geometry_operators import BaseGeometryOperator, BaseRegularizer, NullRegularizer
from .mdp_operators import PolicyTable, TabularMdp, evaluate_exact
from .policy_eval_operators import (
    BaseFeatureMap,
    EpisodeScore,
    ErrorReport,
    EvalDataset,
    KernelAnchorFeatures,
    QModel,
    StateFeatures,
    TabularOneHotFeatures,
    anchor_pool,
    diagnose_errors,
    exact_dataset,
    fit_augmented_L,
    fit_ridge,
    sample_dataset,
    score_episodes,
    truncation_for,
)

PROBE_CAP = 256


class PolicyEvalModule:
    """
    策略评估模块（顶层）

    使用方式：
    1. 传入环境（表格环境可同时传入精确 MDP）
    2. collect 收集数据集
    3. fit / fit_augmented 得到 QModel

    Example:
        config = {
            "features": {"kind": "kernel_anchors", "n_frequencies": 256, "n_anchors": 128},
            "n_samples": 1000,
            "burn_in": 200,
        }

        evaluator = PolicyEvalModule(env, config)
        dataset = evaluator.collect(policy, rng)
        model = evaluator.fit(dataset)
    """

    def __init__(
        self,
        env,
        config: Dict[str, Any] = None,
        mdp: Optional[TabularMdp] = None,
        reg: Optional[BaseRegularizer] = None,
        verbose: bool = False,
    ):
        """
        初始化策略评估模块

        Args:
            env: 环境
            config: 评估配置（features / n_samples / burn_in / truncation / ridge_lambda /
                    oracle / n_workers / n_resamples）
            mdp: 对应的精确表格 MDP（可选）
            reg: 正则项
            verbose: 是否打印详细信息
        """
        self.env = env
        self.config = config or {}
        self.mdp = mdp
        self.reg = reg or NullRegularizer()
        self.verbose = verbose

        self.n_samples = int(self.config.get("n_samples", 1000))
        self.burn_in = int(self.config.get("burn_in", 200))
        truncation = self.config.get("truncation")
        self.truncation = int(truncation) if truncation is not None else truncation_for(env.gamma, env.c_bar)
        ridge_lambda = self.config.get("ridge_lambda")
        self.ridge_lambda = None if ridge_lambda is None else float(ridge_lambda)
        self.n_workers = int(self.config.get("n_workers", 1))
        self.n_resamples = int(self.config.get("n_resamples", 20))
        self.n_score_episodes = int(self.config.get("score_episodes", 10))
        spec = getattr(env, "spec", None)
        cap = getattr(spec, "episode_cap", None) or getattr(spec, "step_cap", None)
        self.score_horizon = int(self.config.get("score_horizon", cap or self.truncation))
        self.oracle = str(self.config.get("oracle", "mc")).lower()
        if self.oracle not in ("mc", "exact"):
            print(f"⚠️  未知的评估方式: {self.oracle}，使用默认 mc")
            self.oracle = "mc"
        if self.oracle == "exact" and mdp is None:
            raise ValueError("oracle = exact 需要表格 MDP")

        self.feature_map = self._init_feature_map()
        self.state_feature_map = StateFeatures.like(self.feature_map)

    def _init_feature_map(self) -> BaseFeatureMap:
        """根据配置初始化特征映射"""
        features = dict(self.config.get("features") or {})
        kind = str(features.get("kind", "kernel_anchors")).lower()

        if kind == "kernel_anchors":
            return KernelAnchorFeatures(features)
        elif kind == "tabular_one_hot":
            if self.mdp is None:
                raise ValueError("tabular_one_hot 特征需要表格 MDP")
            return TabularOneHotFeatures({"n_states": self.mdp.n_states, "n_actions": self.mdp.n_actions})
        else:
            print(f"⚠️  未知的特征映射: {kind}，使用默认 kernel_anchors")
            return KernelAnchorFeatures(features)

    @property
    def uses_exact_targets(self) -> bool:
        return self.oracle == "exact"

    def env_state(self, index: int):
        """表格状态编号对应的环境状态"""
        if hasattr(self.env, "index_state"):
            return self.env.index_state(index)
        return int(index)

    def collect(
        self,
        policy: Callable,
        rng: np.random.Generator,
        pi_table: Optional[PolicyTable] = None,
        bootstrap: Optional[Callable] = None,
        behavior: Optional[Callable] = None,
        n_samples: Optional[int] = None,
    ) -> EvalDataset:
        """
        收集 π_k 的评估数据集

        Args:
            policy: π_k（状态 -> 单纯形行或动作）
            rng: 采样随机数生成器
            pi_table: π_k 的表格形式（精确目标需要）
            bootstrap: 截断处的剩余价值
            behavior: 行为策略
            n_samples: 覆盖配置中的样本数

        Returns:
            EvalDataset
        """
        if self.uses_exact_targets:
            if pi_table is None:
                raise ValueError("精确目标需要策略的表格形式")
            dataset = exact_dataset(self.mdp, pi_table, self.reg)
            dataset.states = [self.env_state(s) for s in dataset.states]
            return dataset
        return sample_dataset(
            self.env,
            policy,
            n_samples or self.n_samples,
            self.burn_in,
            self.truncation,
            rng,
            self.reg,
            bootstrap,
            self.n_workers,
            behavior,
        )

    def prepare_features(self) -> BaseFeatureMap:
        """
        核锚点特征尚未拟合时，从重置分布抽取锚点

        锚点流由特征种子决定，不占用采样流，也不计入环境步数。
        """
        fmap = self.feature_map
        if (
            isinstance(fmap, KernelAnchorFeatures)
            and not fmap.is_fitted
            and fmap.anchor_source == "reset"
            and getattr(self.env, "supports_reset", False)
        ):
            states, actions = anchor_pool(self.env, fmap.n_anchors, np.random.default_rng(fmap.seed))
            fmap.fit(fmap.encode(self.env, states, actions))
            if self.verbose:
                print(f"📌 从重置分布抽取 {fmap.n_anchors} 个锚点，带宽 {fmap.bandwidth:.4f}")
        return fmap

    def fit(self, dataset: EvalDataset) -> QModel:
        """ridge 回归得到 Q̃"""
        self.prepare_features()
        return fit_ridge(dataset, self.feature_map, self.ridge_lambda, self.env)

    def fit_augmented(
        self,
        dataset: EvalDataset,
        policy: Callable,
        geom: BaseGeometryOperator,
        eta: float,
    ) -> QModel:
        """拟合增广 L̃（Q̃ 分量与 ∇̃ω 分量分开）"""
        self.prepare_features()
        return fit_augmented_L(
            dataset, policy, geom, eta, self.feature_map, self.state_feature_map, self.ridge_lambda, self.env
        )

    def score(
        self,
        policy: Callable,
        rng: np.random.Generator,
        bootstrap: Optional[Callable] = None,
    ) -> EpisodeScore:
        """从重置分布出发的 Monte Carlo 回合，同时给出截断回报与 bootstrap 修正回报"""
        return score_episodes(self.env, policy, self.n_score_episodes, self.score_horizon, rng, self.reg, bootstrap)

    def probe_indices(self, rng: np.random.Generator, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """诊断用的探测状态编号：状态数不超过 256 时取全部，否则按权重抽取"""
        n_states = self.mdp.n_states
        if n_states <= PROBE_CAP:
            return np.arange(n_states)
        p = None if weights is None else np.asarray(weights, dtype=float) / np.sum(weights)
        return np.sort(rng.choice(n_states, size=PROBE_CAP, replace=False, p=p))

    def diagnose(
        self,
        policy: Callable,
        pi_table: PolicyTable,
        rng: np.random.Generator,
        weights: Optional[np.ndarray] = None,
        bootstrap: Optional[Callable] = None,
    ) -> ErrorReport:
        """
        评估误差诊断（需要精确 MDP）

        Args:
            policy: π_k
            pi_table: π_k 的表格形式
            rng: 随机数生成器
            weights: 状态权重
            bootstrap: 与运行时一致的 bootstrap

        Returns:
            ErrorReport
        """
        if self.mdp is None:
            raise ValueError("误差诊断需要精确的表格 MDP")
        probes = self.probe_indices(rng, weights)
        states: List[Any] = [self.env_state(i) for i in probes]
        probe_weights = None if weights is None else np.asarray(weights, dtype=float)[probes] + 1e-300
        exact_q0 = evaluate_exact(self.mdp, pi_table, self.reg).Q[probes]

        def refit(stream: np.random.Generator) -> np.ndarray:
            return self.fit(self.collect(policy, stream, pi_table, bootstrap)).q0_table(states)

        best_fit = None
        if self.mdp.n_states <= PROBE_CAP:
            exact = exact_dataset(self.mdp, pi_table, self.reg)
            exact.states = [self.env_state(s) for s in exact.states]
            best_fit = self.fit(exact).q0_table(states)

        if self.verbose:
            print(f"🔄 误差诊断：{self.n_resamples} 次重新拟合，{len(states)} 个探测状态")
        return diagnose_errors(refit, exact_q0, states, probe_weights, best_fit, self.n_resamples, rng)

    def summary(self) -> Dict[str, Any]:
        """
        返回模块摘要信息

        Returns:
            摘要字典
        """
        return {
            "module": "PolicyEvalModule",
            "feature_map": self.feature_map.name,
            "oracle": self.oracle,
            "n_samples": self.n_samples,
            "burn_in": self.burn_in,
            "truncation": self.truncation,
            "ridge_lambda": self.ridge_lambda,
            "n_workers": self.n_workers,
        }


__all__ = ["PolicyEvalModule", "QModel", "EvalDataset", "ErrorReport"]
