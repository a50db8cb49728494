import numpy as np
import pytest

from polopt.nodes.pda import PdaModule
from polopt.nodes.traces import Trace, TraceRecord
from polopt.workflows import SUITES, load_config, verify
from polopt.workflows.verification import (
    LQR_NONCONVEX,
    check_exact_descent,
    check_fa_equivalence,
    check_lqr_stabilization,
    check_monotonicity,
    check_nonconvex_pmd,
    check_pda_linear_rate,
    check_performance_difference,
    check_pmd_linear_rate,
    check_policy_iteration,
    check_ridge_trend,
    lqr_report,
)


def assert_passed(result):
    passed, detail = result
    assert passed, detail


def synthetic_trace(f, residual):
    return Trace(records=[TraceRecord(iteration=k, f=a, min_neg_psi=b) for k, (a, b) in enumerate(zip(f, residual))])


class TestIdentities:
    def test_performance_difference(self):
        assert_passed(check_performance_difference(n_mdps=5))

    def test_monotonicity(self):
        assert_passed(check_monotonicity(n_mdps=5))


class TestRates:
    def test_pmd_linear_rate(self):
        assert_passed(check_pmd_linear_rate(n_mdps=2))

    def test_pda_linear_rate(self):
        assert_passed(check_pda_linear_rate(n_mdps=2, k_max=60))

    def test_policy_iteration(self):
        assert_passed(check_policy_iteration(n_mdps=5))

    def test_exact_descent(self):
        assert_passed(check_exact_descent(n_mdps=2, k_max=20))

    def test_nonconvex_pmd(self):
        assert_passed(check_nonconvex_pmd(n_mdps=1))


class TestFaErrors:
    def test_fa_equivalence(self):
        assert_passed(check_fa_equivalence(k_max=8))

    @pytest.mark.slow
    def test_ridge_trend(self):
        assert_passed(check_ridge_trend(n_seeds=3, sizes=(128, 2048)))


class TestLqr:
    def test_report(self):
        residual = np.concatenate([[np.nan], 1.0 / np.arange(1, 101)])
        traces = [synthetic_trace(np.linspace(50.0, 20.0, 101), residual) for _ in range(9)]
        traces.append(synthetic_trace(np.linspace(20.0, 30.0, 101), residual))
        report = lqr_report(traces, checkpoint=10)
        assert report["improved"] == 9 and report["n_seeds"] == 10
        assert report["residual_ratio"] == pytest.approx(0.1)
        assert report["final_mean"] == pytest.approx(21.0)

    def test_report_negative_residual(self):
        traces = [synthetic_trace([5.0, 4.0, 3.0], [np.nan, 0.5, -0.1])]
        assert lqr_report(traces, checkpoint=1)["residual_ratio"] == 0.0
        flat = [synthetic_trace([5.0, 4.0, 3.0], [np.nan, 0.0, 0.0])]
        assert lqr_report(flat, checkpoint=1)["residual_ratio"] == np.inf

    def test_nonconvex_config(self):
        config = load_config({**LQR_NONCONVEX, "k_max": 100})
        module = PdaModule(config)
        assert module.mode == "continuous"
        assert module.context.curvature.mu_d == pytest.approx(-0.1)
        assert module.schedule.lam(0) == pytest.approx(100 * 101 * 0.1)

    @pytest.mark.slow
    def test_stabilization_smoke(self):
        passed, detail = check_lqr_stabilization(n_seeds=2, k_max=3, checkpoint=1)
        assert isinstance(passed, bool)
        assert "Riccati" in detail


class TestVerify:
    def test_suites(self):
        assert sorted(SUITES) == ["fa-errors", "identities", "lqr", "rates"]

    def test_identities_suite(self):
        report = verify("identities")
        assert set(report) == {"performance_difference", "monotonicity"}
        assert all(passed for passed, _ in report.values())

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            verify("bogus")
