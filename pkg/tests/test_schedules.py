import numpy as np
import pytest

from polopt.nodes.errors import ScheduleError
from polopt.nodes.geometry_operators import KlToAnchorRegularizer
from polopt.nodes.strategies import CurvatureSpec, PdaSchedule, PmdSchedule


class TestCurvatureSpec:
    def test_mu_d(self):
        spec = CurvatureSpec.from_config({"mu_h": 0.3, "mu_Q": 0.1})
        assert spec.mu_d == pytest.approx(0.2)
        assert spec.effective_mu_d == pytest.approx(0.2)

    def test_tilde_overrides(self):
        spec = CurvatureSpec(mu_h=0.3, mu_tilde_d=-0.4)
        assert spec.effective_mu_d == -0.4

    def test_defaults_from_regularizer(self):
        reg = KlToAnchorRegularizer({"weight": 0.25}, 3)
        spec = CurvatureSpec.from_config({}, reg)
        assert spec.mu_h == pytest.approx(0.25)
        assert spec.M_h == pytest.approx(reg.lipschitz)


class TestPmdSchedule:
    def test_geometric(self):
        schedule = PmdSchedule({"kind": "geometric", "gamma": 0.9})
        np.testing.assert_allclose([schedule.eta(k) for k in range(4)], 0.9 ** -np.arange(4))
        assert schedule.beta(7) == 1.0
        assert schedule.window == 200

    def test_geometric_needs_gamma(self):
        with pytest.raises(ScheduleError) as err:
            PmdSchedule({"kind": "geometric"})
        assert err.value.rule == "parameter"

    def test_constant(self):
        schedule = PmdSchedule({"kind": "constant", "eta": 2.0, "horizon": 10})
        assert schedule.eta(0) == schedule.eta(9) == 2.0
        assert schedule.window == 10

    def test_nonconvex_step(self):
        schedule = PmdSchedule({"kind": "nonconvex"}, CurvatureSpec(mu_h=-0.5))
        assert schedule.eta(3) == pytest.approx(1.0)

    def test_nonconvex_requires_negative_curvature(self):
        with pytest.raises(ScheduleError):
            PmdSchedule({"kind": "nonconvex"}, CurvatureSpec(mu_h=0.5))

    def test_step_too_large_for_curvature(self):
        with pytest.raises(ScheduleError) as err:
            PmdSchedule({"kind": "constant", "eta": 4.0}, CurvatureSpec(mu_h=-0.5))
        assert err.value.rule == "curvature_step"
        assert err.value.iteration == 0

    def test_sqrt_horizon(self):
        schedule = PmdSchedule({"kind": "sqrt_horizon", "horizon": 100, "gamma": 0.9, "c_bar": 1.0, "D0": 1.0})
        assert schedule.eta(50) == pytest.approx(0.01)

    def test_sqrt_horizon_needs_horizon(self):
        with pytest.raises(ScheduleError):
            PmdSchedule({"kind": "sqrt_horizon", "gamma": 0.9})

    def test_inverse_t_passes_weighted_rule(self):
        schedule = PmdSchedule({"kind": "inverse_t", "horizon": 50}, CurvatureSpec(mu_h=1.0))
        assert schedule.eta(0) == pytest.approx(1.0)
        assert schedule.eta(4) == pytest.approx(0.2)

    def test_inverse_t_weighted(self):
        schedule = PmdSchedule({"kind": "inverse_t_weighted", "horizon": 50}, CurvatureSpec(mu_h=2.0))
        assert schedule.eta(3) == pytest.approx(0.25)
        assert schedule.beta(3) == 5.0

    def test_inverse_t_uses_mu_h(self):
        schedule = PmdSchedule({"kind": "inverse_t", "horizon": 20}, CurvatureSpec(mu_h=1.0, mu_tilde_d=2.0))
        assert schedule.eta(0) == pytest.approx(1.0)
        assert schedule.eta(9) == pytest.approx(0.1)

    def test_inverse_t_rejects_weak_mu_d(self):
        with pytest.raises(ScheduleError) as err:
            PmdSchedule({"kind": "inverse_t", "horizon": 20}, CurvatureSpec(mu_h=1.0, mu_Q=0.5))
        assert err.value.rule == "weighted_step"

    def test_inverse_t_requires_strong_convexity(self):
        with pytest.raises(ScheduleError):
            PmdSchedule({"kind": "inverse_t"})

    def test_continuous_nonconvex(self):
        schedule = PmdSchedule({"kind": "continuous_nonconvex", "horizon": 100},
                               CurvatureSpec(mu_tilde_d=-0.5))
        assert schedule.eta(0) == pytest.approx(0.1)

    def test_unknown_kind_falls_back(self, capsys):
        schedule = PmdSchedule({"kind": "adaptive", "gamma": 0.9})
        assert schedule.kind == "geometric"
        assert "未知" in capsys.readouterr().out


class TestPdaSchedule:
    def test_geometric(self):
        schedule = PdaSchedule({"kind": "geometric", "gamma": 0.5, "lam": 1.0})
        assert schedule.beta(3) == 8.0
        assert schedule.beta_sum(2) == 7.0
        assert schedule.mu(2) == pytest.approx(1.0)

    def test_zero_lambda_without_strong_convexity(self):
        with pytest.raises(ScheduleError) as err:
            PdaSchedule({"kind": "geometric", "gamma": 0.9, "lam": 0.0})
        assert err.value.rule == "strong_convexity"

    def test_zero_lambda_with_strong_convexity(self):
        schedule = PdaSchedule({"kind": "geometric", "gamma": 0.9, "lam": 0.0}, CurvatureSpec(mu_h=0.1))
        assert schedule.mu(0) == pytest.approx(0.1)

    def test_const_lambda_defaults_to_mu_d(self):
        schedule = PdaSchedule({"kind": "linear_beta_const_lambda"}, CurvatureSpec(mu_h=0.2))
        assert schedule.lam(5) == pytest.approx(0.2)
        assert schedule.mu(2) == pytest.approx(0.2 * 6 + 0.2)

    def test_poly_lambda(self):
        schedule = PdaSchedule({"kind": "linear_beta_poly_lambda", "lam": 1.0})
        assert schedule.lam(3) == pytest.approx(8.0)
        assert schedule.lam_prev(0) == schedule.lam(0) == 1.0
        assert schedule.lam_prev(4) == pytest.approx(8.0)

    def test_poly_lambda_default(self):
        schedule = PdaSchedule({"kind": "linear_beta_poly_lambda", "gamma": 0.9, "c_bar": 1.0, "D0": 2.0})
        assert schedule.lam(0) == pytest.approx(np.sqrt(4.0) / 10.0)

    def test_nonconvex(self):
        schedule = PdaSchedule({"kind": "nonconvex", "horizon": 10}, CurvatureSpec(mu_h=-0.1))
        assert schedule.lam(0) == pytest.approx(11.0)
        assert schedule.mu(9) == pytest.approx(5.5)

    def test_nonconvex_needs_horizon(self):
        with pytest.raises(ScheduleError) as err:
            PdaSchedule({"kind": "nonconvex"}, CurvatureSpec(mu_h=-0.1))
        assert err.value.rule == "parameter"

    def test_dual_curvature_violation(self):
        with pytest.raises(ScheduleError) as err:
            PdaSchedule({"kind": "linear_beta_const_lambda", "lam": 0.9, "horizon": 50}, CurvatureSpec(mu_h=-0.1))
        assert err.value.rule == "dual_curvature"
        assert err.value.iteration == 3

    def test_beta_sum_beyond_window(self):
        schedule = PdaSchedule({"kind": "linear_beta_const_lambda", "lam": 1.0, "horizon": 5})
        assert schedule.beta_sum(9) == pytest.approx(55.0)
