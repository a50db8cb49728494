"""
Policy Evaluation Operators 包

1. 特征映射（核锚点随机特征、表格 one-hot、状态特征）
2. 按协议采样（burn-in、均匀动作、截断回报 + bootstrap）
3. ridge 回归与增广 L̃ 的拟合
4. 误差诊断
"""

from .base import BaseFeatureMap
from .features import (
    KernelAnchorFeatures,
    TabularOneHotFeatures,
    StateFeatures,
    feature_map_from_dict,
    median_bandwidth,
)
from .sampling import (
    EvalDataset,
    sample_dataset,
    rollout_return,
    exact_dataset,
    truncation_for,
    table_policy,
    spawn_generators,
    score_episodes,
    EpisodeScore,
    anchor_pool,
)
from .regression import QModel, fit_ridge, fit_augmented_L, evaluate_model, encode_dataset
from .diagnostics import ErrorReport, diagnose_errors

__all__ = [
    "BaseFeatureMap",
    "KernelAnchorFeatures",
    "TabularOneHotFeatures",
    "StateFeatures",
    "feature_map_from_dict",
    "median_bandwidth",
    "EvalDataset",
    "sample_dataset",
    "rollout_return",
    "exact_dataset",
    "truncation_for",
    "table_policy",
    "spawn_generators",
    "score_episodes",
    "EpisodeScore",
    "anchor_pool",
    "QModel",
    "fit_ridge",
    "fit_augmented_L",
    "evaluate_model",
    "encode_dataset",
    "ErrorReport",
    "diagnose_errors",
]
