"""
实验配置

TOML 与 JSON 两种格式等价；读入后补全默认值并做跨字段检查，
所有违反的约束一次性以 ConfigError 报出。
"""

import copy
import itertools
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Iterator, List, Tuple, Union

from ..nodes.errors import ConfigError

ALGORITHMS = ("pmd-exact", "pmd-fa", "pda-exact", "pda-fa", "policy-iteration", "value-iteration")
TABULAR_KINDS = ("random_tabular", "tabular_json", "gridworld")
CONTINUOUS_KINDS = ("lqr", "pendulum")
SIMPLEX_GEOMETRIES = ("entropy", "tsallis", "neg_tsallis")

DEFAULTS: Dict[str, Any] = {
    "algorithm": "pmd-exact",
    "k_max": 100,
    "seeds": [0],
    "output": "runs",
    "record_timing": False,
    "environment": {"kind": "random_tabular"},
    "geometry": {},
    "regularizer": {"kind": "null"},
    "schedule": {},
    "curvature": {},
    "eval": {},
    "noise": {"scale": 1.0},
    "grid": {},
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(source: Union[str, Path, Dict[str, Any]]) -> Dict[str, Any]:
    """
    读取配置（.toml / .json / 字典），补全默认值并校验

    Raises:
        ConfigError: 配置不合法
    """
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        raw = json.loads(text) if path.suffix == ".json" else tomllib.loads(text)
    config = _merge(DEFAULTS, raw)
    validate_config(config)
    return config


def validate_config(config: Dict[str, Any]) -> None:
    """跨字段检查，收集全部违反项"""
    violations: List[str] = []
    algorithm = config.get("algorithm")
    env_kind = str((config.get("environment") or {}).get("kind", "random_tabular")).lower()
    geometry_kind = str((config.get("geometry") or {}).get("kind", "")).lower()
    eval_config = config.get("eval") or {}
    features = eval_config.get("features") or {}
    feature_kind = str(features.get("kind", "kernel_anchors")).lower()

    if algorithm not in ALGORITHMS:
        violations.append(f"algorithm 必须是 {ALGORITHMS} 之一，实际为 {algorithm!r}")
    if env_kind not in TABULAR_KINDS + CONTINUOUS_KINDS:
        violations.append(f"environment.kind 未知：{env_kind!r}")
    if not isinstance(config.get("k_max"), int) or config["k_max"] < 1:
        violations.append(f"k_max 必须是正整数，实际为 {config.get('k_max')!r}")
    seeds = config.get("seeds")
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        violations.append(f"seeds 必须是非空整数列表，实际为 {seeds!r}")

    exact = algorithm in ("pmd-exact", "pda-exact", "policy-iteration", "value-iteration")
    if exact and env_kind in CONTINUOUS_KINDS:
        violations.append(f"{algorithm} 需要表格环境，实际为 {env_kind}")
    if env_kind in CONTINUOUS_KINDS and geometry_kind in SIMPLEX_GEOMETRIES:
        violations.append(f"连续动作环境 {env_kind} 的动作集合不是单纯形，不能使用 {geometry_kind} 几何")
    if eval_config.get("oracle") == "exact" and env_kind not in TABULAR_KINDS:
        violations.append("eval.oracle = exact 需要表格环境")
    if feature_kind == "tabular_one_hot" and env_kind not in TABULAR_KINDS:
        violations.append("tabular_one_hot 特征需要表格环境")
    if str(features.get("action_encoding", "one_hot")).lower() == "afterstate" and env_kind != "gridworld":
        violations.append(f"afterstate 动作编码只支持 gridworld，实际为 {env_kind}")
    for key in ("n_samples", "truncation", "score_episodes"):
        value = eval_config.get(key)
        if value is not None and (not isinstance(value, int) or value < 1):
            violations.append(f"eval.{key} 必须是正整数，实际为 {value!r}")
    noise_scale = (config.get("noise") or {}).get("scale", 1.0)
    if not isinstance(noise_scale, (int, float)) or noise_scale < 0:
        violations.append(f"noise.scale 必须非负，实际为 {noise_scale!r}")
    for key, values in (config.get("grid") or {}).items():
        if "." not in key:
            violations.append(f"grid 键必须是带点的路径（如 schedule.lam），实际为 {key!r}")
        if not isinstance(values, list) or not values:
            violations.append(f"grid.{key} 必须是非空列表")

    if violations:
        raise ConfigError(violations)


def set_dotted(config: Dict[str, Any], key: str, value: Any) -> Dict[str, Any]:
    """返回把 a.b.c 设为 value 后的新配置"""
    out = copy.deepcopy(config)
    node = out
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return out


def grid_points(config: Dict[str, Any]) -> Iterator[Tuple[Dict[str, Any], Dict[str, Any]]]:
    """[grid] 的笛卡尔积：逐个返回 (网格点, 对应的配置)"""
    grid = config.get("grid") or {}
    keys = sorted(grid)
    for values in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, values))
        point_config = {k: v for k, v in config.items() if k != "grid"}
        for key, value in point.items():
            point_config = set_dotted(point_config, key, value)
        yield point, point_config


def parse_seeds(text: str) -> List[int]:
    """'0..9' 或 '1,3,5'"""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part.strip()]


def config_header(config: Dict[str, Any]) -> str:
    """写入 CSV 头部的完整配置（键排序，保证可复现）"""
    return json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
