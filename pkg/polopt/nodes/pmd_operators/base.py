"""
求解器 Operator 基类

每次运行都是一个 operator：
- initialize(): 构造 k = 0 的状态
- iterate(state): 由 π_k 得到 π_{k+1}
- observe(state): 把状态中的诊断量整理成 TraceRecord

run(k_max) 只是对这三个方法的循环；LangGraph 工作流调用同样的方法，两者的轨迹一致。
"""

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Dict, Optional

import numpy as np

from ..geometry_operators import BaseGeometryOperator, BaseRegularizer
from ..mdp_operators import (
    OracleSolution,
    PolicyTable,
    TabularMdp,
    ValueFunctions,
    evaluate_exact,
    stationarity_residual,
)
from ..traces import ResidualTracker, Trace, TraceRecord

RECORD_FIELDS = {f.name for f in fields(TraceRecord)}


@dataclass
class SolverState:
    """
    一次迭代后的运行状态

    Attributes:
        k: 迭代下标（policy 即 π_k）
        policy: π_k（PolicyTable 或 state -> 动作的函数）
        table: π_k 的表格形式（有精确 MDP 时）
        vals: π_k 的精确价值函数
        model: 用于得到 π_k 的 QModel
        accumulator: PDA 的对偶累加器
        value_estimate: 下一次采样时截断处使用的 V̂
        info: 本次迭代的诊断量（字段名与 TraceRecord 一致）
    """

    k: int = 0
    policy: Any = None
    table: Optional[PolicyTable] = None
    vals: Optional[ValueFunctions] = None
    model: Any = None
    accumulator: Any = None
    value_estimate: Optional[Callable[[Any], float]] = None
    info: Dict[str, Any] = field(default_factory=dict)


def as_policy_table(rows: np.ndarray) -> PolicyTable:
    """截断舍入误差后构造 PolicyTable"""
    rows = np.clip(np.asarray(rows, dtype=float), 0.0, None)
    return PolicyTable(rows / rows.sum(axis=1, keepdims=True))


class BaseSolverOperator(ABC):
    """
    求解器基类

    子类实现 initialize / iterate；observe、run 与精确诊断在这里统一处理。
    """

    def __init__(
        self,
        geom: BaseGeometryOperator,
        reg: BaseRegularizer,
        config: Dict[str, Any] = None,
        mdp: Optional[TabularMdp] = None,
        oracle: Optional[OracleSolution] = None,
        weighting: Optional[np.ndarray] = None,
        verbose: bool = False,
    ):
        """
        初始化 operator

        Args:
            geom: Bregman 几何
            reg: 正则项
            config: 配置字典（record_timing / keep_policies / probes / seed）
            mdp: 精确表格 MDP（可选）
            oracle: 最优解（提供 f* 与 ν*）
            weighting: 目标函数的权重，缺省时取 oracle.nu，再缺省时取均匀分布
            verbose: 是否打印详细信息
        """
        self.config = config or {}
        self.name = self.__class__.__name__
        self.geom = geom
        self.reg = reg
        self.mdp = mdp
        self.oracle = oracle
        if weighting is None and oracle is not None:
            weighting = oracle.nu
        if weighting is None and mdp is not None:
            weighting = np.full(mdp.n_states, 1.0 / mdp.n_states)
        self.weighting = None if weighting is None else np.asarray(weighting, dtype=float)
        self.record_timing = bool(self.config.get("record_timing", False))
        self.keep_policies = bool(self.config.get("keep_policies", False))
        probes = self.config.get("probes")
        self.probes = None if probes is None else np.asarray(probes, dtype=int)
        self.verbose = verbose
        self.tracker = ResidualTracker()
        self.trace = Trace(meta={"operator": self.name})
        self._started = 0.0

    @abstractmethod
    def initialize(self) -> SolverState:
        """k = 0 的状态"""
        pass

    @abstractmethod
    def iterate(self, state: SolverState) -> SolverState:
        """π_k → π_{k+1}"""
        pass

    def observe(self, state: SolverState) -> TraceRecord:
        """把 state.info 整理成 TraceRecord 并追加到轨迹"""
        values = {k: v for k, v in state.info.items() if k in RECORD_FIELDS and k != "iteration"}
        if not self.record_timing:
            values.pop("wall_ms", None)
        record = TraceRecord(iteration=state.k, **values)
        self.trace.records.append(record)
        if self.keep_policies:
            self.trace.policies.append(state.table if state.table is not None else state.policy)
        return record

    def finalize(self, rng: Optional[np.random.Generator] = None) -> Trace:
        """写入逐探测状态的最优下标与一个均匀随机的迭代下标"""
        self.trace.best_index = self.tracker.best_index
        n = len(self.trace.records)
        if n > 1:
            rng = rng or np.random.default_rng(int(self.config.get("seed", 0)))
            self.trace.random_index = int(rng.integers(n - 1))
        return self.trace

    def run(self, k_max: int) -> Trace:
        """
        运行 k_max 次迭代

        Args:
            k_max: 迭代次数

        Returns:
            Trace（k_max + 1 条记录，第 k 条对应 π_k）
        """
        if self.verbose:
            print("=" * 60)
            print(f"🚀 {self.name}: 运行 {k_max} 次迭代")
        state = self.initialize()
        self.observe(state)
        for _ in range(k_max):
            state = self.iterate(state)
            self.observe(state)
            if self.verbose and (state.k % max(1, k_max // 10) == 0 or state.k == k_max):
                print(f"🔄 k = {state.k:4d}  f = {state.info.get('f', float('nan')):.6f}")
        if self.verbose:
            print(f"✅ {self.name} 完成")
            print("=" * 60)
        return self.finalize()

    def _tic(self):
        self._started = time.perf_counter()

    def _toc(self) -> float:
        return (time.perf_counter() - self._started) * 1000.0

    def score_metrics(self, evaluator, policy, rng: np.random.Generator, bootstrap=None) -> Dict[str, float]:
        """Monte Carlo 打分：f̂、环境得分、截断回报与 bootstrap 修正回报"""
        scored = evaluator.score(policy, rng, bootstrap)
        return {
            "f": scored.f_hat,
            "episode_score": scored.episode_score,
            "f_truncated": scored.truncated,
            "f_bootstrap": scored.bootstrapped,
        }

    def exact_metrics(self, table: PolicyTable, vals: Optional[ValueFunctions] = None) -> Dict[str, float]:
        """f(π)、gap 与 𝒟(π, π*)"""
        if vals is None:
            vals = evaluate_exact(self.mdp, table, self.reg)
        f = float(self.weighting @ vals.V)
        out = {"f": f}
        if self.oracle is not None:
            out["gap"] = f - self.oracle.f_star
            out["D_to_opt"] = float(
                self.oracle.nu @ self.geom.divergence(table.rows, self.oracle.policy.rows, clip=True)
            )
        return out

    def residual_metrics(
        self,
        k: int,
        table_k: PolicyTable,
        table_next: PolicyTable,
        vals_k: ValueFunctions,
        vals_next: ValueFunctions,
        psi_weight: float = 1.0,
        allowance: float = 0.0,
        div_scale: Optional[tuple] = None,
    ) -> Dict[str, float]:
        """
        相邻两步之间的精确诊断

        Args:
            k: 当前迭代下标
            table_k / table_next: π_k 与 π_{k+1}
            vals_k / vals_next: 对应的价值函数
            psi_weight: −ψ 的权重（PDA 使用 β_k）
            allowance: 允许的价值上升量（PDA 的 λ 修正项）
            div_scale: PDA 的 (μ_k/β_k, μ_{k−1}/β_k)

        Returns:
            max_value_increase、neg_psi、min_neg_psi 与散度残差
        """
        residual = stationarity_residual(table_k, table_next, self.geom, self.reg, vals_k, self.probes)
        return {
            "max_value_increase": float(np.max(vals_next.V - vals_k.V)) - allowance,
            **self.psi_metrics(residual, k, psi_weight, div_scale),
        }

    def psi_metrics(self, residual, k: int, psi_weight: float = 1.0,
                    div_scale: Optional[tuple] = None) -> Dict[str, float]:
        """
        −ψ 与散度残差

        PMD 记录 D(π_k, π_{k+1}) 与 D(π_{k+1}, π_k)；
        PDA 记录 (μ_k/β_k)·D(π_{k+1}, π_k) 与 (μ_{k−1}/β_k)·D(π_k, π_{k+1})。
        """
        per_probe = psi_weight * residual.per_probe_neg_advantage
        if div_scale is None:
            forward, backward = residual.div_forward, residual.div_backward
        else:
            forward = div_scale[0] * residual.div_backward
            backward = div_scale[1] * residual.div_forward
        return {
            "neg_psi": float(np.mean(per_probe)),
            "min_neg_psi": self.tracker.update(per_probe, k),
            "div_forward": float(forward),
            "div_backward": float(backward),
        }

    def __repr__(self) -> str:
        return f"{self.name}(config={self.config})"
