"""
随机表格 MDP 生成器

转移行服从 Dirichlet(1)，可选稀疏化后重新归一化；再混入 1e-3 的均匀分布保证遍历性。
代价服从 Uniform[0, 1]。
"""

import numpy as np

from ..mdp_operators import TabularMdp

MIXING = 1e-3


def random_tabular(
    n_states: int,
    n_actions: int,
    gamma: float,
    sparsity: float = 0.0,
    seed: int = 0,
) -> TabularMdp:
    """
    生成随机表格 MDP

    Args:
        n_states: 状态数
        n_actions: 动作数
        gamma: 折扣因子
        sparsity: 每个转移概率被置零的比例 ∈ [0, 1)
        seed: 随机种子

    Returns:
        TabularMdp
    """
    if not 0.0 <= sparsity < 1.0:
        raise ValueError(f"sparsity 必须在 [0, 1) 内，实际为 {sparsity}")
    rng = np.random.default_rng(seed)
    kernel = rng.dirichlet(np.ones(n_states), size=n_states * n_actions)
    if sparsity > 0:
        keep = rng.random(kernel.shape) >= sparsity
        keep[np.arange(kernel.shape[0]), np.argmax(kernel, axis=1)] = True
        kernel = np.where(keep, kernel, 0.0)
        kernel /= kernel.sum(axis=1, keepdims=True)
    kernel = (1.0 - MIXING) * kernel + MIXING / n_states
    kernel /= kernel.sum(axis=1, keepdims=True)
    cost = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    meta = {"kind": "random_tabular", "seed": int(seed), "sparsity": float(sparsity)}
    return TabularMdp(kernel, cost, gamma, 1.0, meta)
