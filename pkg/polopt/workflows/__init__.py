"""
工作流包

- config: 实验配置的读取与校验
- experiment_graph: LangGraph 编排的求解循环
- metrics: 指标 CSV 与跨种子聚合
- harness: run / gridsearch / 基准算法
- verification: verify 检查集合
"""

from .config import ALGORITHMS, load_config, validate_config, parse_seeds, grid_points, set_dotted
from .experiment_graph import build_experiment_graph, run_graph
from .metrics import MetricRow, aggregate, read_seed_csv, read_headers, trace_rows
from .harness import make_rng, seed_rngs, run, run_seed, gridsearch
from .verification import SUITES, verify

__all__ = [
    "ALGORITHMS",
    "load_config",
    "validate_config",
    "parse_seeds",
    "grid_points",
    "set_dotted",
    "build_experiment_graph",
    "run_graph",
    "MetricRow",
    "aggregate",
    "read_seed_csv",
    "read_headers",
    "trace_rows",
    "make_rng",
    "seed_rngs",
    "run",
    "run_seed",
    "gridsearch",
    "SUITES",
    "verify",
]
