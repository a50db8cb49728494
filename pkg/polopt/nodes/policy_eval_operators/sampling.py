"""
数据采样 Operators

采样协议：
1. 从重置分布出发按 π_k 运行 burn_in 步，近似 π_k 诱导的状态分布
2. 在该状态上均匀抽取动作（有限动作：均匀顶点；Box：均匀分布）
3. 之后按 π_k 运行至多 truncation 步，累计折扣代价，截断处加 γ^T·bootstrap(s_T)
4. 下一个样本重新重置环境

每条轨迹使用从 SeedSequence 派生的独立子流，结果与线程数无关。
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from ..errors import ResetUnsupportedError
from ..geometry_operators import BaseRegularizer, NullRegularizer
from ..mdp_operators import PolicyTable, TabularMdp, evaluate_exact

Policy = Callable[[Any], np.ndarray]


@dataclass(eq=False)
class EvalDataset:
    """
    评估数据集

    Attributes:
        states / actions: 样本的状态与动作（有限动作时为下标）
        targets: y_i
        inputs: 编码后的 Z（可选，读 CSV 时只有它）
        meta: burn_in、truncation、n_samples、env_steps 等
    """

    states: List[Any]
    actions: List[Any]
    targets: np.ndarray
    inputs: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def env_steps(self) -> int:
        return int(self.meta.get("env_steps", 0))

    def to_csv(self, path: Union[str, Path]) -> None:
        if self.inputs is None:
            raise ValueError("导出 CSV 前需要先编码输入 Z")
        frame = pd.DataFrame(self.inputs, columns=[f"z{i}" for i in range(self.inputs.shape[1])])
        frame["y"] = self.targets
        frame.to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "EvalDataset":
        frame = pd.read_csv(path)
        targets = frame.pop("y").to_numpy(dtype=float)
        return cls(states=[], actions=[], targets=targets, inputs=frame.to_numpy(dtype=float))


def _policy_cost(env, reg: BaseRegularizer, policy_out, state) -> float:
    return float(reg.value(policy_out, env.state_key(state))) if reg.kind != "null" else 0.0


def _draw_action(env, policy_out, rng: np.random.Generator):
    if hasattr(policy_out, "sample"):
        return policy_out.sample(rng)
    if env.finite_actions:
        p = np.clip(np.asarray(policy_out, dtype=float), 0.0, None)
        return int(rng.choice(len(p), p=p / p.sum()))
    return np.asarray(policy_out, dtype=float)


def _uniform_action(env, rng: np.random.Generator):
    if env.finite_actions:
        return int(rng.integers(env.n_actions))
    return env.action_set.sample_uniform(rng)


def spawn_generators(rng: np.random.Generator, n: int) -> List[np.random.Generator]:
    """从 rng 派生 n 个独立子流"""
    root = np.random.SeedSequence(rng.integers(0, 2 ** 63, size=4).tolist())
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(n)]


def rollout_return(
    env,
    policy: Policy,
    state,
    first_action,
    truncation: int,
    rng: np.random.Generator,
    reg: BaseRegularizer,
    bootstrap: Optional[Callable[[Any], float]] = None,
    behavior: Optional[Policy] = None,
):
    """
    从 (state, first_action) 出发的折扣累计代价

    Returns:
        (y, 环境步数)
    """
    behavior = behavior or policy
    y, discount, steps = 0.0, 1.0, 0
    s, a = state, first_action
    for t in range(truncation):
        if env.is_absorbing(s):
            return y + discount * env.absorbing_value(s), steps
        out = policy(s)
        s_next, c = env.step(s, a, rng)
        y += discount * (c + _policy_cost(env, reg, out, s))
        steps += 1
        discount *= env.gamma
        s = s_next
        if t + 1 < truncation:
            a = _draw_action(env, behavior(s), rng)
    if env.is_absorbing(s):
        return y + discount * env.absorbing_value(s), steps
    if bootstrap is not None:
        y += discount * float(bootstrap(s))
    return y, steps


def sample_dataset(
    env,
    policy: Policy,
    n_samples: int,
    burn_in: int,
    truncation: int,
    rng: np.random.Generator,
    reg: Optional[BaseRegularizer] = None,
    bootstrap: Optional[Callable[[Any], float]] = None,
    n_workers: int = 1,
    behavior: Optional[Policy] = None,
) -> EvalDataset:
    """
    按采样协议生成数据集

    Args:
        env: 环境（必须支持重置）
        policy: π_k（有限动作返回单纯形行，连续动作返回动作）
        n_samples: 样本数
        burn_in: 混合步数 B
        truncation: 截断长度 T
        rng: 随机数生成器
        reg: 正则项（累计 h^{π(s_t)}(s_t)）
        bootstrap: 截断处的剩余价值估计
        n_workers: 线程数
        behavior: 行为策略（默认等于 policy）

    Returns:
        EvalDataset

    Raises:
        ResetUnsupportedError: 环境不支持重置
    """
    if not getattr(env, "supports_reset", False):
        raise ResetUnsupportedError(f"{env.name} 不支持重置，无法按协议采样")
    reg = reg or NullRegularizer()
    behavior = behavior or policy
    streams = spawn_generators(rng, n_samples)

    def one_sample(stream: np.random.Generator):
        s = env.reset(stream)
        steps = 0
        for _ in range(burn_in):
            if env.is_absorbing(s):
                break
            s = env.sample_transition(s, _draw_action(env, behavior(s), stream), stream)
            steps += 1
        a = _uniform_action(env, stream)
        y, rollout_steps = rollout_return(env, policy, s, a, truncation, stream, reg, bootstrap, behavior)
        return s, a, y, steps + rollout_steps

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one_sample, streams))
    else:
        results = [one_sample(stream) for stream in streams]

    states, actions, targets, steps = zip(*results) if results else ((), (), (), ())
    return EvalDataset(
        states=list(states),
        actions=list(actions),
        targets=np.asarray(targets, dtype=float),
        meta={
            "burn_in": burn_in,
            "truncation": truncation,
            "n_samples": n_samples,
            "env_steps": int(sum(steps)),
            "source": "monte_carlo",
        },
    )


def truncation_for(gamma: float, c_bar: float, tol: float = 1e-6) -> int:
    """使 γ^T c̄/(1−γ) ≤ tol 的最小截断长度"""
    if gamma == 0.0:
        return 1
    return max(1, int(np.ceil(np.log(tol * (1.0 - gamma) / max(c_bar, 1e-300)) / np.log(gamma))))


def exact_dataset(mdp: TabularMdp, pi, reg: BaseRegularizer) -> EvalDataset:
    """
    σ = 0 的精确数据集：所有 (s, i) 及其精确 Q_0^π(s, i)
    """
    vals = evaluate_exact(mdp, pi, reg)
    states = np.repeat(np.arange(mdp.n_states), mdp.n_actions)
    actions = np.tile(np.arange(mdp.n_actions), mdp.n_states)
    return EvalDataset(
        states=states.tolist(),
        actions=actions.tolist(),
        targets=vals.Q.ravel().copy(),
        meta={"source": "exact", "n_samples": mdp.n_states * mdp.n_actions, "env_steps": 0},
    )


def table_policy(pi: PolicyTable, state_key: Callable[[Any], int] = int) -> Policy:
    """把 PolicyTable 包装成 state -> row 的函数"""
    return lambda s: pi.rows[state_key(s)]


class EpisodeScore(NamedTuple):
    """
    回合打分

    Attributes:
        f_hat: 折扣累计代价（含吸收态尾项）
        episode_score: env.episode_score 的均值
        truncated: 只累计前 horizon 步、不含任何尾项
        bootstrapped: 未结束的回合在 horizon 处加 γ^H·V̂(s_H)
    """

    f_hat: float
    episode_score: float
    truncated: float
    bootstrapped: float


def score_episodes(
    env,
    policy: Policy,
    n_episodes: int,
    horizon: int,
    rng: np.random.Generator,
    reg: Optional[BaseRegularizer] = None,
    bootstrap: Optional[Callable[[Any], float]] = None,
) -> EpisodeScore:
    """
    从重置分布出发运行完整回合

    Args:
        bootstrap: 截断处的剩余价值估计（缺省视为 0）

    Returns:
        EpisodeScore
    """
    reg = reg or NullRegularizer()
    full, truncated, corrected, scores = [], [], [], []
    for stream in spawn_generators(rng, n_episodes):
        s = env.reset(stream)
        costs, total, discount, tail = [], 0.0, 1.0, None
        for _ in range(horizon):
            if env.is_absorbing(s):
                tail = discount * env.absorbing_value(s)
                break
            out = policy(s)
            s_next, c = env.step(s, _draw_action(env, out, stream), stream)
            costs.append(c)
            total += discount * (c + _policy_cost(env, reg, out, s))
            discount *= env.gamma
            s = s_next
        if tail is None and env.is_absorbing(s):
            tail = discount * env.absorbing_value(s)
        truncated.append(total)
        full.append(total + (tail or 0.0))
        if tail is None:
            tail = discount * float(bootstrap(s)) if bootstrap is not None else 0.0
        corrected.append(total + tail)
        scores.append(env.episode_score(costs))
    return EpisodeScore(float(np.mean(full)), float(np.mean(scores)),
                        float(np.mean(truncated)), float(np.mean(corrected)))


def anchor_pool(env, n: int, rng: np.random.Generator):
    """从重置分布抽取 n 个状态并配上均匀动作（不消耗环境步数）"""
    states = [env.reset(rng) for _ in range(n)]
    actions = [_uniform_action(env, rng) for _ in range(n)]
    return states, actions
