"""
特征映射 Operators

1. KernelAnchorFeatures: 随机傅里叶特征近似高斯核，第 i 个特征是 z 与锚点 ζ_i 的近似核值
2. TabularOneHotFeatures: (状态下标, 动作下标) 的 one-hot
3. StateFeatures: 只依赖状态的特征（用于 ∇̃ω 分量）
"""

from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.kernel_approximation import RBFSampler

from .base import BaseFeatureMap

MEDIAN_PROBE = 256


def median_bandwidth(Z: np.ndarray) -> float:
    """中位数启发式：前 256 个点两两距离的中位数"""
    probe = np.asarray(Z, dtype=float)[:MEDIAN_PROBE]
    if len(probe) < 2:
        return 1.0
    median = float(np.median(pdist(probe)))
    return median if median > 0 else 1.0


def _one_hot(index: Sequence[int], size: int) -> np.ndarray:
    out = np.zeros((len(index), size))
    out[np.arange(len(index)), np.asarray(index, dtype=int)] = 1.0
    return out


class KernelAnchorFeatures(BaseFeatureMap):
    """
    核锚点特征

    config:
        n_frequencies / n_anchors / seed / bandwidth
        action_encoding: one_hot（默认）或 afterstate（需要环境实现 embed_afterstate）
        anchor_source: reset（默认，锚点取自重置分布）或 data（取第一批数据的前 N 个点）

    ψ_i(z) = ⟨RBF(ζ_i), RBF(z)⟩ = (1/D) Σ_j φ_j(ζ_i) φ_j(z)，φ_j = √2 cos(ω_jᵀz + b_j)。
    RBFSampler 的 gamma = 1/(2σ²) 对应 ω_j ~ N(0, σ^{-2} I)。
    """

    kind = "kernel_anchors"

    def __init__(self, config: Dict[str, Any] = None):
        super().__init__(config)
        self.n_frequencies = int(self.config.get("n_frequencies", 256))
        self.n_anchors = int(self.config.get("n_anchors", 128))
        self.seed = int(self.config.get("seed", 0))
        self.action_encoding = str(self.config.get("action_encoding", "one_hot")).lower()
        if self.action_encoding not in ("one_hot", "afterstate"):
            print(f"⚠️  未知的动作编码: {self.action_encoding}，使用默认 one_hot")
            self.action_encoding = "one_hot"
        self.anchor_source = str(self.config.get("anchor_source", "reset")).lower()
        if self.anchor_source not in ("reset", "data"):
            print(f"⚠️  未知的锚点来源: {self.anchor_source}，使用默认 reset")
            self.anchor_source = "reset"
        bandwidth = self.config.get("bandwidth")
        self.bandwidth: Optional[float] = None if bandwidth is None else float(bandwidth)
        self.anchors: Optional[np.ndarray] = None
        self.sampler: Optional[RBFSampler] = None
        self._anchor_features: Optional[np.ndarray] = None

    @property
    def is_fitted(self) -> bool:
        return self.anchors is not None

    @property
    def n_features(self) -> int:
        return 0 if self.anchors is None else len(self.anchors)

    def fit(self, Z: np.ndarray) -> "KernelAnchorFeatures":
        """锚点取前 N 个数据点；未指定带宽时用中位数启发式"""
        Z = np.asarray(Z, dtype=float)
        if self.bandwidth is None:
            self.bandwidth = median_bandwidth(Z)
        self._build(Z[: self.n_anchors], Z.shape[1])
        return self

    def _build(self, anchors: np.ndarray, dim: int):
        self.sampler = RBFSampler(
            gamma=1.0 / (2.0 * self.bandwidth ** 2),
            n_components=self.n_frequencies,
            random_state=self.seed,
        ).fit(np.zeros((1, dim)))
        self.anchors = np.array(anchors, dtype=float)
        self.anchors.setflags(write=False)
        self._anchor_features = self.sampler.transform(self.anchors)

    def encode(self, env, states: Sequence, actions: Sequence) -> np.ndarray:
        """
        有限动作：concat(embed(s), one_hot(i))，afterstate 编码为 embed_afterstate(s, i)；
        连续动作：concat(embed(s), a)
        """
        if env.finite_actions and self.action_encoding == "afterstate":
            return np.stack([env.embed_afterstate(s, int(a)) for s, a in zip(states, actions)])
        embedded = np.stack([env.embed(s) for s in states])
        if env.finite_actions:
            return np.hstack([embedded, _one_hot(actions, env.n_actions)])
        return np.hstack([embedded, np.atleast_2d(np.asarray(actions, dtype=float)).reshape(len(states), -1)])

    def random_features(self, Z: np.ndarray) -> np.ndarray:
        return self.sampler.transform(np.atleast_2d(np.asarray(Z, dtype=float)))

    def transform(self, Z: np.ndarray) -> np.ndarray:
        if not self.is_fitted:
            raise ValueError("特征映射尚未拟合，请先调用 fit()")
        return self.random_features(Z) @ self._anchor_features.T

    def primal_weights(self, theta: np.ndarray) -> np.ndarray:
        """把锚点折叠进 D 维权重：Q̃(z) = RBF(z)·w"""
        return self._anchor_features.T @ np.asarray(theta, dtype=float)

    def input_gradient(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        """∇_z RBF(z)·w"""
        z = np.asarray(z, dtype=float)
        scale = np.sqrt(2.0 / self.n_frequencies)
        phase = z @ self.sampler.random_weights_ + self.sampler.random_offset_
        return -scale * self.sampler.random_weights_ @ (np.sin(phase) * w)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n_frequencies": self.n_frequencies,
            "n_anchors": self.n_anchors,
            "seed": self.seed,
            "action_encoding": self.action_encoding,
            "bandwidth": self.bandwidth,
            "anchors": None if self.anchors is None else self.anchors.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "KernelAnchorFeatures":
        fmap = cls({k: payload[k] for k in ("n_frequencies", "n_anchors", "seed", "bandwidth", "action_encoding")
                    if k in payload})
        if payload.get("anchors") is not None:
            anchors = np.asarray(payload["anchors"], dtype=float)
            fmap._build(anchors, anchors.shape[1])
        return fmap


class TabularOneHotFeatures(BaseFeatureMap):
    """(s, i) ↦ e_{s·n_A + i}；z 就是 (状态下标, 动作下标)"""

    kind = "tabular_one_hot"

    def __init__(self, config: Dict[str, Any] = None):
        super().__init__(config)
        self.n_states = int(self.config["n_states"])
        self.n_actions = int(self.config.get("n_actions", 1))

    @property
    def n_features(self) -> int:
        return self.n_states * self.n_actions

    def encode(self, env, states: Sequence, actions: Sequence) -> np.ndarray:
        keys = [env.state_key(s) if env is not None else int(s) for s in states]
        return np.column_stack([keys, np.asarray(actions, dtype=int)])

    def transform(self, Z: np.ndarray) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z)).astype(int)
        return _one_hot(Z[:, 0] * self.n_actions + Z[:, 1], self.n_features)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "n_states": self.n_states, "n_actions": self.n_actions}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TabularOneHotFeatures":
        return cls({"n_states": payload["n_states"], "n_actions": payload["n_actions"]})


class StateFeatures(BaseFeatureMap):
    """
    只依赖状态的特征

    包装另一个特征映射：表格情形用状态 one-hot，其余情形在 embed(s) 上用核锚点。
    """

    kind = "state"

    def __init__(self, inner: BaseFeatureMap):
        super().__init__({"inner": inner.kind})
        self.inner = inner

    @classmethod
    def like(cls, fmap: BaseFeatureMap) -> "StateFeatures":
        """与给定的状态-动作特征同类的状态特征"""
        if isinstance(fmap, TabularOneHotFeatures):
            return cls(TabularOneHotFeatures({"n_states": fmap.n_states, "n_actions": 1}))
        config = dict(fmap.config)
        config.pop("bandwidth", None)
        return cls(KernelAnchorFeatures(config))

    @property
    def n_features(self) -> int:
        return self.inner.n_features

    @property
    def is_fitted(self) -> bool:
        return self.inner.is_fitted

    def fit(self, Z: np.ndarray) -> "StateFeatures":
        self.inner.fit(Z)
        return self

    def encode(self, env, states: Sequence, actions: Sequence = None) -> np.ndarray:
        if isinstance(self.inner, TabularOneHotFeatures):
            return self.inner.encode(env, states, np.zeros(len(states), dtype=int))
        return np.stack([env.embed(s) for s in states])

    def transform(self, Z: np.ndarray) -> np.ndarray:
        return self.inner.transform(Z)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "inner": self.inner.to_dict()}


def feature_map_from_dict(payload: Dict[str, Any]) -> BaseFeatureMap:
    kind = payload.get("kind")
    if kind == KernelAnchorFeatures.kind:
        return KernelAnchorFeatures.from_dict(payload)
    if kind == TabularOneHotFeatures.kind:
        return TabularOneHotFeatures.from_dict(payload)
    if kind == StateFeatures.kind:
        return StateFeatures(feature_map_from_dict(payload["inner"]))
    raise ValueError(f"未知的特征映射: {kind}")
