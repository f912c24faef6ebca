# tests/test_theory.py
"""Tests for the analytic predictions."""
import math
import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

D_STAR = 45.28


def _hbar():
    from physics.models import RotatorConfig
    return RotatorConfig.preset("full").hbar


def _params(alpha=None, kappa=1.0 / 300.0, D_star=D_STAR, hbar=None):
    from physics.models import TheoryParams, WaitingTimeDist
    return TheoryParams(D_star=D_star, hbar=_hbar() if hbar is None else hbar,
                        kappa=kappa, dist=WaitingTimeDist.from_alpha(alpha))


class TestParams:
    def test_derived_times(self):
        params = _params()
        assert params.t_star == pytest.approx(663.0, rel=2e-3)
        assert params.t_c == pytest.approx(41.0, rel=2e-3)
        assert params.xi == pytest.approx(params.t_star / 2)
        assert params.p_star == pytest.approx(D_STAR / _hbar())

    def test_stationary_ratio(self):
        params = _params(alpha=2.0)
        assert params.t_c_eff / params.t_star == pytest.approx(0.1236, abs=5e-4)
        weak = _params(alpha=2.0, kappa=1.0 / 30000.0)
        assert weak.t_c_eff / weak.t_star == pytest.approx(12.36, abs=0.05)

    def test_profile_choice(self):
        from physics.models import Profile
        assert _params(alpha=2.0).profile == Profile.GAUSSIAN
        assert _params(alpha=0.5).profile == Profile.EXPONENTIAL

    def test_invalid(self):
        from physics.errors import DomainError
        with pytest.raises(DomainError):
            _params(kappa=-1.0)
        with pytest.raises(DomainError):
            _params(D_star=0.0)


class TestNoiseless:
    def test_var_p0_limits(self):
        from physics.theory import var_p0
        params = _params()
        assert var_p0(0, D_STAR, params.t_star) == 0.0
        assert var_p0(1e7, D_STAR, params.t_star) == pytest.approx(D_STAR ** 2 / _hbar() ** 2, rel=1e-3)
        early = var_p0(1.0, D_STAR, params.t_star)
        assert early == pytest.approx(D_STAR, rel=2e-3)

    def test_var_p0_array(self):
        from physics.theory import var_p0
        values = var_p0(np.arange(5), 2.0, 10.0)
        assert values.shape == (5,)
        assert np.all(np.diff(values) > 0)

    def test_force_correlation_of_linear_growth(self):
        from physics.theory import noiseless_force_correlation
        c0 = noiseless_force_correlation(3.0 * np.arange(20))
        assert c0[0] == 3.0
        assert np.allclose(c0[1:], 0.0)

    def test_force_correlation_sign(self):
        from physics.theory import noiseless_force_correlation, var_p0
        c0 = noiseless_force_correlation(var_p0(np.arange(200), D_STAR, 50.0))
        assert c0[0] > 0
        assert np.all(c0[1:] < 0)

    def test_force_correlation_reconstructs_variance(self):
        from physics.theory import noiseless_force_correlation, var_p0
        T = 300
        V = var_p0(np.arange(T + 1), D_STAR, 80.0)
        c0 = noiseless_force_correlation(V)
        for t in (1, 7, 150, 300):
            a = np.arange(t)
            total = c0[np.abs(a[:, None] - a[None, :])].sum()
            assert total == pytest.approx(V[t], rel=1e-9)

    def test_force_correlation_validation(self):
        from physics.errors import DomainError
        from physics.theory import noiseless_force_correlation
        with pytest.raises(DomainError):
            noiseless_force_correlation([1.0, 2.0, 3.0])
        with pytest.raises(DomainError):
            noiseless_force_correlation([0.0])


class TestDecoherence:
    def test_no_noise(self):
        from physics.theory import decoherence_factor
        assert decoherence_factor(_params(kappa=0.0), 100, 0) == 1.0
        assert decoherence_factor(_params(alpha=0.5), 30, 30) == 1.0

    def test_deterministic_is_exponential(self):
        from physics.theory import decoherence_factor
        params = _params()
        assert decoherence_factor(params, 100, 50) == pytest.approx(math.exp(-50 / params.t_c))

    def test_levy_monotonicity(self):
        from physics.theory import RenewalTables, decoherence_factor
        params = _params(alpha=0.5)
        tables = RenewalTables.build(params, 200)
        row = [decoherence_factor(params, t, 20, tables) for t in range(20, 201, 10)]
        col = [decoherence_factor(params, 200, s, tables) for s in range(0, 201, 10)]
        assert np.all(np.diff(row) <= 1e-15)
        assert np.all(np.diff(col) >= -1e-15)
        assert all(0.0 < v <= 1.0 for v in row + col)

    def test_row_matches_pointwise(self):
        from physics.theory import RenewalTables, decoherence_factor
        params = _params(alpha=0.5)
        tables = RenewalTables.build(params, 120)
        row = tables.decoherence_row(120)
        for s in (0, 1, 60, 119):
            assert row[s] == pytest.approx(decoherence_factor(params, 120, s, tables), abs=1e-14)

    def test_horizon_check(self):
        from physics.errors import HorizonError
        from physics.theory import RenewalTables, decoherence_factor
        params = _params(alpha=0.5)
        tables = RenewalTables.build(params, 50)
        with pytest.raises(HorizonError):
            decoherence_factor(params, 60, 10, tables)

    def test_invalid_order(self):
        from physics.errors import DomainError
        from physics.theory import decoherence_factor
        with pytest.raises(DomainError):
            decoherence_factor(_params(), 5, 6)

    def test_ml_approximation_short_times(self):
        from physics.theory import decoherence_ml_approx
        t_c = 41.0
        assert decoherence_ml_approx(0.5, t_c, 0.0) == 1.0
        nbar = 0.01 * t_c
        assert decoherence_ml_approx(0.5, t_c, nbar) == pytest.approx(math.exp(-nbar / t_c), rel=1e-3)

    def test_ml_approximation_domain(self):
        from physics.errors import DomainError
        from physics.theory import decoherence_ml_approx
        with pytest.raises(DomainError):
            decoherence_ml_approx(1.5, 41.0, 3.0)
        with pytest.raises(DomainError):
            decoherence_ml_approx(0.5, 41.0, -1.0)

    def test_ml_approximation_crosses_over_to_power_law(self):
        from physics.models import WaitingTimeDist
        from physics.theory import decoherence_ml_approx, decoherence_power_law
        c = WaitingTimeDist.yule_simon(0.5).tail_constant_c
        t_c, t = 1.0, 1.0e4
        nbar = math.sqrt(t) / (math.pi * c)
        approx = decoherence_ml_approx(0.5, t_c, nbar)
        assert approx == pytest.approx(decoherence_power_law(0.5, c, t_c, t), rel=1e-3)

    def test_ml_approximation_starts_as_stretched_exponential(self):
        from physics.models import WaitingTimeDist
        from physics.theory import decoherence_ml_approx
        c = WaitingTimeDist.yule_simon(0.5).tail_constant_c
        t_c = 1.0e6
        logs = [math.log(decoherence_ml_approx(0.5, t_c, math.sqrt(t) / (math.pi * c)))
                for t in (100.0, 400.0)]
        # ln D scales as t^alpha
        assert logs[1] / logs[0] == pytest.approx(2.0, rel=1e-3)
        assert logs[0] == pytest.approx(-10.0 / (math.pi * c) / t_c, rel=1e-3)

    def test_power_law_tail_form(self):
        from physics.theory import decoherence_power_law
        assert decoherence_power_law(0.5, 0.4431, 40.0, 100.0) == pytest.approx(0.4431 * 40 / 0.5 / 10)

    @pytest.mark.slow
    def test_power_law_tail_of_exact_decoherence(self):
        from physics.renewal import mgf_inverse_time
        from physics.theory import decoherence_power_law
        params = _params(alpha=0.5)
        T = 100_000
        M = mgf_inverse_time(params.dist, -1.0 / params.t_c, T)
        tail = decoherence_power_law(0.5, params.dist.tail_constant_c, params.t_c, T)
        assert M[T] / tail == pytest.approx(1.0, rel=0.1)

    def test_stationary_mgf_asymptote(self):
        from physics.renewal import mgf_inverse_time
        from physics.theory import mgf_stationary_asymptote
        from physics.models import WaitingTimeDist
        dist = WaitingTimeDist.yule_simon(2.0)
        z, T = -0.01, 2000
        exact = mgf_inverse_time(dist, z, T)[T]
        approx = mgf_stationary_asymptote(z, T, dist.mean_waiting_time)
        assert math.log(exact) / math.log(approx) == pytest.approx(1.0, rel=0.1)

    def test_ml_mgf_asymptote_bounds(self):
        from physics.theory import mgf_ml_asymptote
        assert mgf_ml_asymptote(0.5, 0.4431, 0.0, 100.0) == 1.0
        value = mgf_ml_asymptote(0.5, 0.4431, -0.05, 5000.0)
        assert 0.0 < value < 1.0


class TestVariance:
    def test_no_noise_reduces_to_localized(self):
        from physics.theory import var_p0, var_p_prediction
        params = _params(kappa=0.0)
        t = np.array([0, 1, 10, 100, 1000])
        assert np.allclose(var_p_prediction(params, t), var_p0(t, D_STAR, params.t_star), rtol=1e-6)

    def test_deterministic_matches_crossover(self):
        from physics.theory import var_p_crossover, var_p_prediction
        params = _params()
        t = np.linspace(params.t_star, 20 * params.t_star, 12).round()
        exact = var_p_prediction(params, t)
        closed = var_p_crossover(t, D_STAR, params.t_star, params.t_c_eff)
        assert np.allclose(exact, closed, rtol=0.02)

    def test_prediction_is_nondecreasing(self):
        from physics.theory import var_p_prediction_series
        S = var_p_prediction_series(_params(), 2000)
        assert S[0] == 0.0
        assert np.all(np.diff(S) >= 0)

    def test_scalar_and_horizon(self):
        from physics.errors import HorizonError
        from physics.theory import var_p_prediction
        params = _params(alpha=2.0)
        assert isinstance(var_p_prediction(params, 50), float)
        with pytest.raises(HorizonError):
            var_p_prediction(params, 500, horizon=100)

    def test_crossover_limits(self):
        from physics.theory import var_p0, var_p_crossover
        params = _params(alpha=2.0)
        assert var_p_crossover(500.0, D_STAR, params.t_star, math.inf) == pytest.approx(
            var_p0(500.0, D_STAR, params.t_star))
        t = 1e6
        slope = (var_p_crossover(t + 1, D_STAR, params.t_star, params.t_c_eff)
                 - var_p_crossover(t, D_STAR, params.t_star, params.t_c_eff))
        assert slope == pytest.approx(D_STAR / 1.1236, rel=1e-3)

    def test_subdiffusive_prefactor(self):
        from physics.models import WaitingTimeDist
        from physics.theory import subdiffusive_prefactor
        assert subdiffusive_prefactor(WaitingTimeDist.yule_simon(0.5)) == pytest.approx(0.7183, abs=1e-4)

    def test_subdiffusive_scaling(self):
        from physics.errors import DomainError
        from physics.theory import var_p_subdiffusive
        params = _params(alpha=0.5)
        ratio = var_p_subdiffusive(2000.0, params) / var_p_subdiffusive(1000.0, params)
        assert ratio == pytest.approx(math.sqrt(2.0))
        with pytest.raises(DomainError):
            var_p_subdiffusive(1000.0, _params(alpha=2.0))

    @pytest.mark.slow
    def test_levy_growth_follows_mean_count(self):
        """Late-time var p ~ (D* t*/t_c) Nbar(t)."""
        from physics.renewal import mean_inverse_time
        from physics.theory import var_p_prediction, var_p_subdiffusive
        params = _params(alpha=0.5, D_star=0.1, hbar=0.1, kappa=0.002)
        T = 40_000
        nbar = mean_inverse_time(params.dist, T)[T]
        value = var_p_prediction(params, T)
        assert value / (params.D_star * params.t_star / params.t_c * nbar) == pytest.approx(1.0, rel=0.1)
        assert value / var_p_subdiffusive(T, params) == pytest.approx(1.0, rel=0.12)


class TestPurityAndFidelity:
    def test_ipr_prediction(self):
        from physics.models import Profile
        from physics.theory import ipr_prediction
        hbar = _hbar()
        ratio = ipr_prediction(9.0, hbar, Profile.GAUSSIAN) / ipr_prediction(9.0, hbar, Profile.EXPONENTIAL)
        assert ratio == pytest.approx(math.sqrt(2.0 / math.pi))
        assert ipr_prediction(hbar ** 2, hbar, Profile.GAUSSIAN) == pytest.approx(1.0 / math.sqrt(math.pi))

    def test_ipr_prediction_domain(self):
        from physics.errors import DomainError
        from physics.models import Profile
        from physics.theory import ipr_prediction
        with pytest.raises(DomainError):
            ipr_prediction(0.0, 0.2, Profile.GAUSSIAN)

    def test_purity_starts_at_one_and_stays_bounded(self):
        from physics.theory import purity_prediction
        params = _params(alpha=0.5)
        values = purity_prediction(params, np.arange(0, 400, 20))
        assert values[0] == 1.0
        assert np.all((values > 0) & (values <= 1.0))

    def test_purity_short_time_decay(self):
        from physics.theory import purity_prediction
        params = _params()
        assert purity_prediction(params, 10) == pytest.approx(math.exp(-20 / params.t_c), rel=0.03)

    def test_purity_bounded_below_by_each_term(self):
        from physics.theory import theory_series
        for alpha in (0.5, 2.0, None):
            series = theory_series(_params(alpha=alpha), [0, 10, 100, 400, 900])
            assert np.all(series.purity_pred >= series.decoherence_D ** 2)
            assert np.all(series.purity_pred >= series.ipr_pred)

    def test_purity_intermediate_slope_levy(self):
        from harness.fitting import fit_power_law
        from physics.theory import purity_prediction
        # t_c = 1 and t* = 40000: D(t, 0)^2 dominates well inside [50, 500]
        params = _params(alpha=0.5, kappa=5e-5, D_star=1.0, hbar=0.005)
        t = np.arange(50, 501)
        fit = fit_power_law(t, purity_prediction(params, t), window=(50, 500))
        assert fit.value == pytest.approx(-1.0, abs=0.2)

    def test_purity_background_slope_levy(self):
        from harness.fitting import fit_power_law
        from physics.theory import purity_prediction
        # t_c = t* = 1: the IPR term carries the purity at late times
        params = _params(alpha=0.5, kappa=2.0, D_star=1.0, hbar=1.0)
        t = np.arange(1000, 10_001, 100)
        fit = fit_power_law(t, purity_prediction(params, t), window=(1000, 10_000))
        assert fit.value == pytest.approx(-0.25, rel=0.2)

    def test_logfid(self):
        from physics.theory import logfid_prediction
        params = _params()
        assert logfid_prediction(params, 0) == 0.0
        assert logfid_prediction(params, 82) == pytest.approx(-2 * 82 / params.t_c)
        assert np.all(logfid_prediction(_params(kappa=0.0), [1, 5]) == 0.0)

    def test_purity_crossover(self):
        from physics.theory import purity_crossover
        stationary = _params(alpha=2.0)
        expected = 2.0 * stationary.t_c * math.log(stationary.t_star)
        assert purity_crossover(stationary) == pytest.approx(expected)
        assert math.isinf(purity_crossover(_params(kappa=0.0)))
        assert purity_crossover(_params(alpha=0.5)) > 0


class TestTheorySeries:
    def test_columns_consistent(self):
        from physics.theory import logfid_prediction, purity_prediction, theory_series, var_p_prediction
        params = _params(alpha=0.5)
        times = [0, 5, 50, 300]
        series = theory_series(params, times)
        assert series.times.tolist() == times
        assert np.allclose(series.var_p_pred, var_p_prediction(params, times))
        assert np.allclose(series.purity_pred, purity_prediction(params, times))
        assert np.allclose(series.logfid_pred, logfid_prediction(params, times))
        assert series.decoherence_D[0] == 1.0
        assert np.all(np.diff(series.decoherence_D) <= 0)

    def test_ml_gap_is_logged_for_levy_noise(self, log_messages):
        from physics.theory import theory_series
        # t_c = 1, so every t >= 10 is compared
        params = _params(alpha=0.5, kappa=0.02, D_star=1.0, hbar=0.1)
        series = theory_series(params, [0, 5, 20, 100, 200])
        assert series.ml_gap is not None and series.ml_gap > 0.1
        warned = [m for m in log_messages if "Mittag-Leffler" in m["message"]]
        assert warned and warned[-1]["level"].name == "WARNING"

    def test_ml_gap_skipped(self):
        from physics.theory import ml_approx_gap, theory_series
        assert theory_series(_params(alpha=2.0), [0, 50]).ml_gap is None
        assert theory_series(_params(alpha=0.5), [0, 50]).ml_gap is None
        assert ml_approx_gap(_params(alpha=0.5, kappa=0.0), [100]) is None

    def test_invalid_times(self):
        from physics.errors import DomainError, HorizonError
        from physics.theory import theory_series
        with pytest.raises(DomainError):
            theory_series(_params(), [])
        with pytest.raises(HorizonError):
            theory_series(_params(), [10, 200], horizon=100)
