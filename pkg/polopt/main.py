"""
polopt 命令行入口

    polopt run <config> [--seeds 0..9] [--out dir]
    polopt gridsearch <config> [--out dir]
    polopt verify <identities|rates|fa-errors|lqr|all>
    polopt export-gridworld <out.json>
"""

import argparse
import sys
from typing import List, Optional

from .nodes.environments import EnvironmentModule
from .nodes.errors import ConfigError, ScheduleError
from .workflows.config import parse_seeds
from .workflows.harness import gridsearch, run, verbose_enabled
from .workflows.verification import SUITES, verify


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polopt", description="策略镜像下降与策略对偶平均实验")
    parser.add_argument("-v", "--verbose", action="store_true", help="打印详细信息")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="运行一个实验配置")
    run_parser.add_argument("config", help="TOML 或 JSON 配置文件")
    run_parser.add_argument("--seeds", type=parse_seeds, default=None, help="'0..9' 或 '1,3,5'")
    run_parser.add_argument("--out", default=None, help="输出目录")

    grid_parser = sub.add_parser("gridsearch", help="[grid] 的穷举搜索")
    grid_parser.add_argument("config")
    grid_parser.add_argument("--out", default=None)

    verify_parser = sub.add_parser("verify", help="运行检查集合")
    verify_parser.add_argument("suite", choices=sorted(SUITES) + ["all"])

    export_parser = sub.add_parser("export-gridworld", help="导出网格世界的表格 JSON")
    export_parser.add_argument("out")
    export_parser.add_argument("--gamma", type=float, default=0.99)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    verbose = verbose_enabled(args.verbose)
    try:
        if args.command == "run":
            result = run(args.config, seeds=args.seeds, out=args.out, verbose=verbose)
            print(f"✅ 已写入 {result.out_dir}，最终 f_hat 均值 {result.final_mean():.6f}")
        elif args.command == "gridsearch":
            best, table = gridsearch(args.config, out=args.out, verbose=verbose)
            print(table.to_string(index=False))
        elif args.command == "verify":
            report = verify(args.suite, verbose=False)
            for name, (passed, detail) in report.items():
                print(f"{'✅' if passed else '❌'} {name}: {detail}")
            return 0 if all(passed for passed, _ in report.values()) else 1
        elif args.command == "export-gridworld":
            environments = EnvironmentModule({"kind": "gridworld", "gamma": args.gamma}, verbose)
            environments.tabular().to_json(args.out)
            print(f"✅ 网格世界已导出到 {args.out}")
    except (ConfigError, ScheduleError) as err:
        print(f"❌ {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
