"""
实验 Harness

核心功能：
1. run: 每个种子一个 CSV，外加跨种子的 aggregate.csv
2. gridsearch: [grid] 的穷举搜索，按最终 f_hat 均值选优
3. value-iteration / policy-iteration 基准，头部记录 Bellman 残差

随机数：每个 (seed, stream_id) 对应一个 Philox 生成器，与线程数无关。
种子在线程池中并行运行，线程数由 POLOPT_THREADS 限制；POLOPT_VERBOSE 打开进度输出。
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from ..nodes.context import STREAMS
from ..nodes.environments import EnvironmentModule
from ..nodes.mdp import MdpModule
from ..nodes.mdp_operators import PolicyTable, bellman_operator
from ..nodes.pda import PdaModule
from ..nodes.pmd import PmdModule
from .config import grid_points, load_config
from .experiment_graph import run_graph
from .metrics import MetricRow, rows_frame, trace_rows, write_aggregate, write_seed_csv

SOLVER_ALGORITHMS = {
    "pmd-exact": (PmdModule, "exact"),
    "pmd-fa": (PmdModule, None),
    "pda-exact": (PdaModule, "exact"),
    "pda-fa": (PdaModule, None),
}


def make_rng(seed: int, stream_id: int) -> np.random.Generator:
    """(seed, stream_id) 对应的 Philox 生成器"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream_id)])))


def seed_rngs(seed: int) -> Dict[str, np.random.Generator]:
    """env / sampling / features / scoring 四个流"""
    return {name: make_rng(seed, stream_id) for stream_id, name in enumerate(STREAMS)}


def worker_count(n_tasks: int) -> int:
    """线程数：POLOPT_THREADS（可写在 .env 中），缺省为 CPU 数"""
    load_dotenv()
    cap = os.getenv("POLOPT_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, n_tasks))


def verbose_enabled(flag: bool = False) -> bool:
    """命令行的 -v 或环境变量 POLOPT_VERBOSE（1 / true / yes / on）"""
    load_dotenv()
    value = os.getenv("POLOPT_VERBOSE", "")
    return bool(flag) or value.strip().lower() in ("1", "true", "yes", "on")


@dataclass
class SeedResult:
    """单个种子的结果"""

    seed: int
    rows: List[MetricRow]
    headers: Dict[str, Any] = field(default_factory=dict)
    trace: Any = None

    @property
    def frame(self) -> pd.DataFrame:
        return rows_frame(self.rows)


@dataclass
class RunResult:
    """一次 run 的结果"""

    config: Dict[str, Any]
    seeds: List[SeedResult]
    aggregate: Optional[pd.DataFrame] = None
    out_dir: Optional[Path] = None

    def final_mean(self, column: str = "f_hat") -> float:
        values = [r.frame[column].iloc[-1] for r in self.seeds]
        return float(np.nanmean(values)) if values else float("nan")


def seeded_config(config: Dict[str, Any], seed: int, rngs: Dict[str, np.random.Generator]) -> Dict[str, Any]:
    """补全与种子有关的配置：随机表格 MDP 的种子取自 env 流"""
    config = json.loads(json.dumps(config))
    environment = config.setdefault("environment", {})
    if environment.get("kind", "random_tabular") == "random_tabular" and "seed" not in environment:
        environment["seed"] = int(rngs["env"].integers(2 ** 31))
    config["seed"] = int(seed)
    return config


def build_solver(config: Dict[str, Any], seed: int, verbose: bool = False):
    """根据 algorithm 构建 PmdModule 或 PdaModule"""
    rngs = seed_rngs(seed)
    config = seeded_config(config, seed, rngs)
    module_cls, mode = SOLVER_ALGORITHMS[config["algorithm"]]
    if mode is not None:
        config["mode"] = mode
    return module_cls(config, rngs=rngs, verbose=verbose)


def _tabular_module(config: Dict[str, Any], seed: int) -> MdpModule:
    config = seeded_config(config, seed, seed_rngs(seed))
    environments = EnvironmentModule(config.get("environment"))
    weighting = environments.weighting()
    return MdpModule(environments.tabular(), {
        "regularizer": config.get("regularizer"),
        "geometry": config.get("geometry") or None,
        "weighting": "nu_star" if weighting is None else weighting,
    })


def run_policy_iteration(config: Dict[str, Any], seed: int) -> SeedResult:
    """策略迭代（η → ∞ 的 PMD），记录 f、gap 与 𝒟"""
    module = _tabular_module(config, seed)
    oracle = module.oracle()
    pi = PolicyTable.uniform(module.mdp.n_states, module.mdp.n_actions)
    rows = []
    vals = module.evaluate(pi)
    for k in range(config["k_max"] + 1):
        f = float(oracle.nu @ vals.V)
        rows.append(MetricRow(seed=seed, iteration=k, f_hat=f, gap=f - oracle.f_star,
                              D_to_opt=module.distance_to_opt(pi)))
        if k < config["k_max"]:
            pi = module.policy_iteration_step(pi)
            vals = module.evaluate(pi)
    return SeedResult(seed, rows, {"bellman_residual": module.bellman_residual(vals.V)})


def run_value_iteration(config: Dict[str, Any], seed: int) -> SeedResult:
    """值迭代：第 k 行为 T^k(0) 的加权值；头部记录收敛后的 Bellman 残差"""
    module = _tabular_module(config, seed)
    oracle = module.oracle()
    V = np.zeros(module.mdp.n_states)
    rows = []
    for k in range(config["k_max"] + 1):
        f = float(oracle.nu @ V)
        rows.append(MetricRow(seed=seed, iteration=k, f_hat=f, gap=f - oracle.f_star))
        if k < config["k_max"]:
            V, _ = bellman_operator(module.mdp, module.regularizer, V, module.geometry)
    result = module.value_iteration()
    return SeedResult(seed, rows, {"bellman_residual": module.bellman_residual(result.V)})


def run_seed(config: Dict[str, Any], seed: int, use_graph: bool = True, verbose: bool = False) -> SeedResult:
    """
    运行单个种子

    Args:
        config: 已校验的配置
        seed: 种子
        use_graph: 是否通过 LangGraph 驱动（轨迹与直接循环一致）
        verbose: 是否打印详细信息
    """
    algorithm = config["algorithm"]
    if algorithm == "policy-iteration":
        return run_policy_iteration(config, seed)
    if algorithm == "value-iteration":
        return run_value_iteration(config, seed)

    module = build_solver(config, seed, verbose)
    k_max = config["k_max"]
    trace = run_graph(module.operator, k_max, verbose) if use_graph else module.run(k_max)
    return SeedResult(seed, trace_rows(trace, seed), trace=trace)


def run(
    source: Union[str, Path, Dict[str, Any]],
    seeds: Optional[List[int]] = None,
    out: Union[str, Path, None] = None,
    write: bool = True,
    verbose: bool = False,
) -> RunResult:
    """
    运行一个实验配置

    Args:
        source: 配置文件路径或配置字典
        seeds: 覆盖配置中的种子
        out: 输出目录（缺省取配置的 output）
        write: 是否写文件
        verbose: 是否打印详细信息

    Returns:
        RunResult

    Raises:
        ConfigError: 配置不合法
    """
    config = load_config(source)
    if seeds is not None:
        config["seeds"] = list(seeds)
    seeds = config["seeds"]

    if verbose:
        print("=" * 60)
        print(f"🚀 {config['algorithm']}: {len(seeds)} 个种子，k_max = {config['k_max']}")

    with ThreadPoolExecutor(max_workers=worker_count(len(seeds))) as pool:
        results = list(pool.map(lambda s: run_seed(config, s, verbose=verbose), seeds))

    result = RunResult(config, results)
    if write:
        out_dir = Path(out or config["output"])
        out_dir.mkdir(parents=True, exist_ok=True)
        for seed_result in results:
            write_seed_csv(out_dir / f"seed_{seed_result.seed}.csv", seed_result.rows, config, seed_result.headers)
        result.aggregate = write_aggregate(out_dir / "aggregate.csv", [r.frame for r in results])
        result.out_dir = out_dir
        if verbose:
            print(f"✅ 结果已写入 {out_dir}")
    if verbose:
        print(f"📊 最终 f_hat 均值: {result.final_mean():.6f}")
        print("=" * 60)
    return result


def _point_key(point: Dict[str, Any]) -> Tuple:
    return tuple(
        (0, float(point[k]), "") if isinstance(point[k], (int, float)) else (1, 0.0, str(point[k]))
        for k in sorted(point)
    )


def gridsearch(
    source: Union[str, Path, Dict[str, Any]],
    out: Union[str, Path, None] = None,
    verbose: bool = False,
) -> Tuple[Dict[str, Any], pd.DataFrame]:
    """
    [grid] 的穷举搜索

    每个网格点在内存中运行全部种子，按最终 f_hat 均值排序，平局取字典序最小的网格点。

    Returns:
        (最优配置, 完整表格)
    """
    config = load_config(source)
    entries = []
    for point, point_config in grid_points(config):
        if verbose:
            print(f"🔍 网格点 {point}")
        result = run(point_config, write=False)
        score = result.final_mean()
        entries.append((np.inf if np.isnan(score) else score, _point_key(point), point, point_config, score))

    entries.sort(key=lambda e: (e[0], e[1]))
    table = pd.DataFrame([{**point, "final_f_hat": score, "rank": rank}
                          for rank, (_, _, point, _, score) in enumerate(entries, start=1)])
    best = entries[0][3] if entries else config

    out_dir = Path(out or config["output"])
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "gridsearch.csv", index=False, na_rep="", lineterminator="\n")
    (out_dir / "best_config.json").write_text(json.dumps(best, indent=2, sort_keys=True, ensure_ascii=False),
                                             encoding="utf-8")
    if verbose:
        print(f"🏆 最优网格点: {entries[0][2] if entries else {}}")
    return best, table
