"""
指标文件

- seed_<s>.csv: 以 "# config:" 等注释行开头，列为 MetricRow 的字段
- aggregate.csv: 每个迭代、每个数值列的均值、标准差、n 与 95% 正态区间
"""

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from ..nodes.traces import Trace
from .config import config_header

NAN = float("nan")
Z_95 = 1.96


@dataclass
class MetricRow:
    """
    per-seed CSV 的一行

    f_hat_truncated 与 f_hat_bootstrap 只在 Monte Carlo 打分时填写：
    前者只累计截断窗口内的代价，后者在未结束的回合末尾加上 γ^H·V̂(s_H)。
    """

    seed: int
    iteration: int
    f_hat: float = NAN
    gap: float = NAN
    D_to_opt: float = NAN
    min_neg_psi: float = NAN
    varsigma_hat: float = NAN
    sigma2_hat: float = NAN
    episode_score: float = NAN
    f_hat_truncated: float = NAN
    f_hat_bootstrap: float = NAN
    wall_ms: float = NAN


COLUMNS = [f.name for f in fields(MetricRow)]


def trace_rows(trace: Trace, seed: int) -> List[MetricRow]:
    """把轨迹转换成 MetricRow"""
    return [
        MetricRow(
            seed=seed,
            iteration=r.iteration,
            f_hat=r.f,
            gap=r.gap,
            D_to_opt=r.D_to_opt,
            min_neg_psi=r.min_neg_psi,
            varsigma_hat=r.varsigma_hat,
            sigma2_hat=r.sigma2_hat,
            episode_score=r.episode_score,
            f_hat_truncated=r.f_truncated,
            f_hat_bootstrap=r.f_bootstrap,
            wall_ms=r.wall_ms,
        )
        for r in trace.records
    ]


def rows_frame(rows: Iterable[MetricRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in rows], columns=COLUMNS)


def write_seed_csv(
    path: Union[str, Path],
    rows: Iterable[MetricRow],
    config: Dict,
    headers: Optional[Dict[str, object]] = None,
) -> Path:
    """
    写单个种子的指标文件

    Args:
        path: 输出路径
        rows: 指标行
        config: 完整配置（写入 "# config:" 注释行）
        headers: 额外的注释行，如 {"bellman_residual": 1e-11}
    """
    path = Path(path)
    lines = [f"# config: {config_header(config)}"]
    for key, value in (headers or {}).items():
        lines.append(f"# {key}: {value!r}")
    body = rows_frame(rows).to_csv(index=False, na_rep="", lineterminator="\n")
    path.write_text("\n".join(lines) + "\n" + body, encoding="utf-8")
    return path


def read_seed_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def read_headers(path: Union[str, Path]) -> Dict[str, str]:
    """读回注释行中的 key: value"""
    headers = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition(": ")
            headers[key] = value
    return headers


def aggregate(frames: List[pd.DataFrame]) -> pd.DataFrame:
    """
    按迭代聚合多个种子

    Returns:
        iteration 加上每个数值列的 _mean / _sd / _n / _lo / _hi
    """
    stacked = pd.concat(frames, ignore_index=True)
    metrics = [c for c in COLUMNS if c not in ("seed", "iteration")]
    grouped = stacked.groupby("iteration", sort=True)
    out = pd.DataFrame({"iteration": sorted(stacked["iteration"].unique())})
    for column in metrics:
        mean = grouped[column].mean().to_numpy()
        sd = grouped[column].std(ddof=1).to_numpy()
        n = grouped[column].count().to_numpy()
        half = Z_95 * sd / np.sqrt(np.maximum(n, 1))
        out[f"{column}_mean"] = mean
        out[f"{column}_sd"] = sd
        out[f"{column}_n"] = n
        out[f"{column}_lo"] = mean - half
        out[f"{column}_hi"] = mean + half
    return out


def write_aggregate(path: Union[str, Path], frames: List[pd.DataFrame]) -> pd.DataFrame:
    table = aggregate(frames)
    table.to_csv(path, index=False, na_rep="", lineterminator="\n")
    return table
