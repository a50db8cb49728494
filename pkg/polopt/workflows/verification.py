"""
verify 子命令的检查集合

- identities: 性能差分恒等式、ν* 下的单调性恒等式
- rates: PMD / PDA 线性收敛、策略迭代压缩、精确模式价值下降、非凸 PMD 平稳性
- fa-errors: 函数逼近与精确模式的一致性、ridge 误差随样本数下降
- lqr: μ_d < 0 的连续动作 PDA 在 LQR 上的 f̂ 下降与残差衰减

每个检查返回 (是否通过, 说明)。
"""

import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..nodes.environment_operators import linear_feedback_cost
from ..nodes.environments import EnvironmentModule
from ..nodes.mdp import MdpModule
from ..nodes.mdp_operators import PolicyTable, evaluate_exact
from ..nodes.pda import PdaModule
from ..nodes.pmd import PmdModule
from ..nodes.policy_eval_operators import EvalDataset, KernelAnchorFeatures, fit_ridge
from ..nodes.traces import Trace
from .config import load_config
from .harness import build_solver

CheckResult = Tuple[bool, str]
GAMMAS = (0.5, 0.9, 0.99)


def _random_policy(rng: np.random.Generator, n_states: int, n_actions: int) -> PolicyTable:
    return PolicyTable(rng.dirichlet(np.ones(n_actions), size=n_states))


def _random_mdp_module(rng: np.random.Generator, gamma=None, max_states: int = 30, max_actions: int = 6):
    env_config = {
        "kind": "random_tabular",
        "n_states": int(rng.integers(2, max_states + 1)),
        "n_actions": int(rng.integers(2, max_actions + 1)),
        "gamma": float(gamma if gamma is not None else rng.choice(GAMMAS)),
        "seed": int(rng.integers(2 ** 31)),
    }
    return MdpModule(EnvironmentModule(env_config).tabular()), env_config


def check_performance_difference(n_mdps: int = 100, tol: float = 1e-9, seed: int = 0) -> CheckResult:
    """V^{π'}(s) − V^π(s) = (1/(1−γ)) Σ κ_s^{π'}(q) ψ^π(q, π'(q))"""
    rng = np.random.default_rng(seed)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(n_mdps):
        module, _ = _random_mdp_module(rng)
        mdp = module.mdp
        pi, pi_prime = (_random_policy(rng, mdp.n_states, mdp.n_actions) for _ in range(2))
        s = int(rng.integers(mdp.n_states))
        lhs = module.evaluate(pi_prime).V[s] - module.evaluate(pi).V[s]
        worst = max(worst, abs(lhs - module.performance_difference(pi, pi_prime, s)))
    elapsed = time.perf_counter() - started
    return worst <= tol, f"{n_mdps} 个 MDP，最大偏差 {worst:.2e}，耗时 {elapsed:.1f}s"


def check_monotonicity(n_mdps: int = 100, tol: float = 1e-9, seed: int = 1) -> CheckResult:
    """−E_{ν*} ψ^π(s, π*(s)) = (1−γ) E_{ν*}[V^π − V^{π*}]"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_mdps):
        module, _ = _random_mdp_module(rng)
        mdp = module.mdp
        oracle = module.oracle()
        pi = _random_policy(rng, mdp.n_states, mdp.n_actions)
        vals = module.evaluate(pi)
        lhs = -float(oracle.nu @ module.advantage_table(vals, pi, oracle.policy))
        rhs = (1.0 - mdp.gamma) * float(oracle.nu @ (vals.V - oracle.V))
        worst = max(worst, abs(lhs - rhs))
    return worst <= tol, f"{n_mdps} 个 MDP，最大偏差 {worst:.2e}"


def _exact_config(env_config: Dict, k_max: int, **sections) -> Dict:
    return {"mode": "exact", "k_max": k_max, "environment": env_config, **sections}


def check_pmd_linear_rate(n_mdps: int = 20, k_max: int = 150, seed: int = 2) -> CheckResult:
    """f(π_k) − f* ≤ γ^k (f(π_0) − f*) + γ^{k−1} 𝒟(π_0, π*)，且 150 步内 gap ≤ 1e-6"""
    rng = np.random.default_rng(seed)
    started = time.perf_counter()
    worst_slack, worst_final = np.inf, 0.0
    for _ in range(n_mdps):
        _, env_config = _random_mdp_module(rng, gamma=0.9)
        trace = PmdModule(_exact_config(env_config, k_max, geometry={"kind": "entropy"},
                                        schedule={"kind": "geometric"})).run()
        gap, d0 = trace.column("gap"), trace.column("D_to_opt")[0]
        k = np.arange(len(gap))
        bound = 0.9 ** k * gap[0] + 0.9 ** (k - 1.0) * d0
        worst_slack = min(worst_slack, float(np.min(bound - gap)))
        worst_final = max(worst_final, float(gap[-1]))
    elapsed = time.perf_counter() - started
    passed = worst_slack >= -1e-8 and worst_final <= 1e-6
    return passed, f"最小余量 {worst_slack:.2e}，最终 gap 最大 {worst_final:.2e}，耗时 {elapsed:.1f}s"


def check_pda_linear_rate(n_mdps: int = 20, k_max: int = 150, seed: int = 2, weight: float = 0.1) -> CheckResult:
    """β_k = γ^{-k}，λ = 0，μ_h > 0：f(π_k) − f* ≤ γ^k (f(π_0) − f*) + 1e-8"""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_mdps):
        _, env_config = _random_mdp_module(rng, gamma=0.9)
        trace = PdaModule(_exact_config(env_config, k_max,
                                        regularizer={"kind": "kl_to_anchor", "weight": weight},
                                        schedule={"kind": "geometric", "lam": 0.0})).run()
        gap = trace.column("gap")
        bound = 0.9 ** np.arange(len(gap)) * gap[0] + 1e-8
        worst = min(worst, float(np.min(bound - gap)))
    return worst >= 0.0, f"{n_mdps} 个 MDP，最小余量 {worst:.2e}"


def check_policy_iteration(n_mdps: int = 50, seed: int = 3) -> CheckResult:
    """(f(π_{k+1}) − f*) / (f(π_k) − f*) ≤ γ + 1e-6"""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_mdps):
        module, _ = _random_mdp_module(rng)
        oracle = module.oracle()
        pi = PolicyTable.uniform(module.mdp.n_states, module.mdp.n_actions)
        gap = module.gap(pi)
        for _ in range(100):
            if gap <= 1e-10:
                break
            pi = module.policy_iteration_step(pi)
            nxt = module.gap(pi)
            worst = max(worst, nxt / gap - module.mdp.gamma)
            gap = nxt
    return worst <= 1e-6, f"{n_mdps} 个 MDP，最大 (比值 − γ) = {worst:.2e}"


def check_exact_descent(n_mdps: int = 10, k_max: int = 50, seed: int = 4) -> CheckResult:
    """V^{π_{k+1}} ≤ V^{π_k} + 1e-10（PMD 与常数 λ 的 PDA）"""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_mdps):
        _, env_config = _random_mdp_module(rng)
        for trace in (
            PmdModule(_exact_config(env_config, k_max, schedule={"kind": "constant", "eta": 1.0})).run(),
            PdaModule(_exact_config(env_config, k_max,
                                    schedule={"kind": "linear_beta_const_lambda", "lam": 1.0})).run(),
        ):
            worst = max(worst, float(np.nanmax(trace.column("max_value_increase"))))
    return worst <= 1e-10, f"最大价值上升 {worst:.2e}"


def check_nonconvex_pmd(n_mdps: int = 5, rho: float = 0.5, seed: int = 5) -> CheckResult:
    """μ_d < 0：min_{t<k} −ψ^{π_t}(s, π_{t+1}(s)) ≤ (V^{π_0}(s) − V*(s))/k + 1e-8，k ∈ {10, 50, 100}"""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n_mdps):
        _, env_config = _random_mdp_module(rng, gamma=0.9, max_states=10, max_actions=4)
        module = PmdModule(_exact_config(
            env_config, 100,
            geometry={"kind": "euclidean"},
            regularizer={"kind": "concave_quadratic", "weight": rho},
            schedule={"kind": "nonconvex"},
        ))
        module.run()
        ctx = module.context
        pi_0 = PolicyTable.uniform(ctx.mdp.n_states, ctx.mdp.n_actions)
        excess = evaluate_exact(ctx.mdp, pi_0, ctx.reg).V - ctx.oracle.V
        tracker = module.operator.tracker
        for k in (10, 50, 100):
            worst = min(worst, float(np.min(excess / k + 1e-8 - tracker.running_min(k))))
    return worst >= 0.0, f"{n_mdps} 个 MDP，最小余量 {worst:.2e}"


def check_fa_equivalence(k_max: int = 20, seed: int = 6) -> CheckResult:
    """one-hot 特征 + 精确目标时，函数逼近的 f 轨迹与精确模式一致（1e-8）"""
    env_config = {"kind": "random_tabular", "n_states": 5, "n_actions": 3, "gamma": 0.9, "seed": seed}
    eval_config = {"oracle": "exact", "features": {"kind": "tabular_one_hot"}, "ridge_lambda": 1e-12,
                   "score": False}
    worst = 0.0
    for module_cls, schedule in (
        (PmdModule, {"kind": "geometric"}),
        (PdaModule, {"kind": "linear_beta_const_lambda", "lam": 1.0}),
    ):
        base = {"k_max": k_max, "environment": env_config, "schedule": schedule}
        exact = module_cls({**base, "mode": "exact"}).run().column("f")
        fa = module_cls({**base, "mode": "finite_fa", "eval": eval_config}).run().column("f")
        worst = max(worst, float(np.max(np.abs(exact - fa))))
    return worst <= 1e-8, f"PMD 与 PDA 的最大偏差 {worst:.2e}"


def ridge_heldout_mse(n_data: int, seed: int, noise: float = 0.3, n_test: int = 2000) -> float:
    """固定光滑目标上的 ridge 回归，返回相对真值的留出 MSE"""
    rng = np.random.default_rng(seed)

    def target(Z: np.ndarray) -> np.ndarray:
        return np.sin(2.0 * Z[:, 0]) * np.cos(Z[:, 1]) + 0.5 * Z[:, 2]

    Z = rng.uniform(-1.0, 1.0, size=(n_data, 3))
    y = target(Z) + noise * rng.standard_normal(n_data)
    fmap = KernelAnchorFeatures({"seed": seed, "n_anchors": 128, "n_frequencies": 256})
    model = fit_ridge(EvalDataset(states=[], actions=[], targets=y, inputs=Z), fmap)
    Z_test = rng.uniform(-1.0, 1.0, size=(n_test, 3))
    return float(np.mean((model.predict(Z_test) - target(Z_test)) ** 2))


def check_ridge_trend(n_seeds: int = 10, sizes=(256, 1024, 4096)) -> CheckResult:
    """N = 4096 的留出 MSE 在 ≥ 8/10 个种子上低于 N = 256，log-log 斜率为负"""
    mse = np.array([[ridge_heldout_mse(n, seed) for n in sizes] for seed in range(n_seeds)])
    improved = int(np.sum(mse[:, -1] < mse[:, 0]))
    slope = float(np.polyfit(np.log(sizes), np.log(mse.mean(axis=0)), 1)[0])
    passed = improved >= int(np.ceil(0.8 * n_seeds)) and slope < 0
    return passed, f"{improved}/{n_seeds} 个种子改善，log-log 斜率 {slope:.3f}"


LQR_NONCONVEX = {
    "algorithm": "pda-fa",
    "environment": {"kind": "lqr", "gamma": 0.95},
    "regularizer": {"kind": "quadratic", "weight": 0.1},
    "curvature": {"mu_Q": 0.2},
    "schedule": {"kind": "nonconvex"},
    "noise": {"scale": 0.5},
    "eval": {"n_samples": 20, "burn_in": 10, "truncation": 40, "score_episodes": 10, "n_probes": 16},
}


def lqr_report(traces: Sequence[Trace], checkpoint: int = 10) -> Dict[str, float]:
    """
    逐种子汇总非凸 LQR 运行

    residual_ratio 是最终与第 checkpoint 次迭代的 min −ψ 中位数之比，
    负的残差估计按 0 计；第 checkpoint 次迭代的中位数不为正时记为 +∞。
    """
    initial = np.array([t.column("f")[0] for t in traces])
    final = np.array([t.column("f")[-1] for t in traces])
    at = min(checkpoint, min(len(t) for t in traces) - 1)
    early = float(np.median([t.column("min_neg_psi")[at] for t in traces]))
    late = float(np.median([t.column("min_neg_psi")[-1] for t in traces]))
    return {
        "n_seeds": len(traces),
        "improved": int(np.sum(final < initial)),
        "initial_mean": float(np.mean(initial)),
        "final_mean": float(np.mean(final)),
        "residual_early": early,
        "residual_late": late,
        "residual_ratio": max(late, 0.0) / early if early > 0 else float("inf"),
    }


def check_lqr_stabilization(n_seeds: int = 10, k_max: int = 100, checkpoint: int = 10,
                            config: Optional[Dict] = None, seed: int = 8) -> CheckResult:
    """
    μ_d < 0 的连续动作 PDA（λ = k(k+1)|μ_d|）：≥ 9/10 个种子 f̂ 下降，
    min −ψ 的中位数从第 10 次到第 100 次迭代至少缩小到 0.40 倍；
    说明中附 Riccati 反馈 u = −Kx 的代价作为参照
    """
    config = load_config({**(config or LQR_NONCONVEX), "k_max": k_max})
    traces = [build_solver(config, s).run(k_max) for s in range(n_seeds)]
    report = lqr_report(traces, checkpoint)

    environments = EnvironmentModule(config["environment"])
    horizon = int(config["eval"].get("truncation", 300))
    baseline = linear_feedback_cost(environments.env, environments.baseline_feedback(),
                                    np.random.default_rng(seed), n_rollouts=50, horizon=horizon)

    passed = report["improved"] >= int(np.ceil(0.9 * n_seeds)) and report["residual_ratio"] <= 0.40
    return passed, (
        f"{report['improved']}/{n_seeds} 个种子 f̂ 下降，残差比 {report['residual_ratio']:.3f}，"
        f"最终 f̂ 均值 {report['final_mean']:.3f}，Riccati 基准 {baseline:.3f}"
        f"（比值 {report['final_mean'] / baseline:.2f}）"
    )


SUITES: Dict[str, List[Tuple[str, Callable[[], CheckResult]]]] = {
    "identities": [
        ("performance_difference", check_performance_difference),
        ("monotonicity", check_monotonicity),
    ],
    "rates": [
        ("pmd_linear_rate", check_pmd_linear_rate),
        ("pda_linear_rate", check_pda_linear_rate),
        ("policy_iteration", check_policy_iteration),
        ("exact_descent", check_exact_descent),
        ("nonconvex_pmd", check_nonconvex_pmd),
    ],
    "fa-errors": [
        ("fa_equivalence", check_fa_equivalence),
        ("ridge_trend", check_ridge_trend),
    ],
    "lqr": [
        ("lqr_stabilization", check_lqr_stabilization),
    ],
}


def verify(suite: str = "all", verbose: bool = False) -> Dict[str, CheckResult]:
    """
    运行检查集合

    Args:
        suite: identities | rates | fa-errors | lqr | all

    Returns:
        {检查名: (是否通过, 说明)}
    """
    if suite == "all":
        checks = [c for name in ("identities", "rates", "fa-errors", "lqr") for c in SUITES[name]]
    elif suite in SUITES:
        checks = SUITES[suite]
    else:
        raise ValueError(f"未知的检查集合: {suite}，可选 {sorted(SUITES)} 或 all")

    report = {}
    for name, check in checks:
        report[name] = check()
        if verbose:
            passed, detail = report[name]
            print(f"{'✅' if passed else '❌'} {name}: {detail}")
    return report
