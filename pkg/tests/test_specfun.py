# tests/test_specfun.py
"""Tests for the Mittag-Leffler and hypergeometric evaluators."""
import math
import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from scipy.special import erfcx


@pytest.mark.parametrize("x,expected", [
    (1.0, 0.0),
    (0.5, 0.5723649429247001),
    (5.0, math.log(24.0)),
])
def test_log_gamma_examples(x, expected):
    from physics.specfun import log_gamma
    assert log_gamma(x) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_log_gamma_rejects_nonpositive(x):
    from physics.errors import DomainError
    from physics.specfun import log_gamma
    with pytest.raises(DomainError):
        log_gamma(x)


class TestPolicy:
    def test_defaults(self):
        from physics.specfun import DEFAULT_POLICY
        assert DEFAULT_POLICY.series_cutoff_terms == 200
        assert DEFAULT_POLICY.series_asymptotic_switch == 5.0
        assert DEFAULT_POLICY.target_abs_tol == 1e-10

    @pytest.mark.parametrize("kwargs", [
        {"series_cutoff_terms": 49},
        {"series_asymptotic_switch": 0.0},
        {"target_abs_tol": 1e-7},
        {"target_abs_tol": 0.0},
    ])
    def test_invalid_policy(self, kwargs):
        from physics.errors import DomainError
        from physics.specfun import MlfEvalPolicy
        with pytest.raises(DomainError):
            MlfEvalPolicy(**kwargs)

    def test_from_settings_reads_environment(self, monkeypatch):
        from physics.specfun import MlfEvalPolicy
        monkeypatch.setenv("MLF_SERIES_TERMS", "300")
        monkeypatch.setenv("MLF_SWITCH", "4.5")
        policy = MlfEvalPolicy.from_settings()
        assert policy.series_cutoff_terms == 300
        assert policy.series_asymptotic_switch == 4.5


class TestMittagLeffler:
    def test_origin(self):
        from physics.specfun import mittag_leffler
        assert mittag_leffler(0.5, 0.0) == 1.0

    def test_alpha_one_is_exponential(self):
        from physics.specfun import mittag_leffler
        assert mittag_leffler(1.0, -1.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
        for x in np.linspace(-30.0, 0.0, 31):
            assert mittag_leffler(1.0, x) == pytest.approx(math.exp(x), abs=1e-10)

    def test_half_order_matches_scaled_erfc(self):
        """E_1/2(-x) = exp(x^2) erfc(x)."""
        from physics.specfun import mittag_leffler
        for x in np.linspace(0.0, 10.0, 41):
            assert mittag_leffler(0.5, -x) == pytest.approx(erfcx(x), abs=1e-8)

    def test_half_order_far_tail(self):
        from physics.specfun import mittag_leffler
        value = mittag_leffler(0.5, -100.0)
        assert value == pytest.approx(erfcx(100.0), rel=1e-8)
        assert value == pytest.approx(5.642e-3, rel=1e-3)

    def test_known_value(self):
        from physics.specfun import mittag_leffler
        assert mittag_leffler(0.5, -1.0) == pytest.approx(0.4275836, abs=1e-7)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75, 1.0])
    def test_bounds_and_monotonicity(self, alpha):
        from physics.specfun import mittag_leffler_array
        xs = np.linspace(-50.0, 0.0, 101)
        values = mittag_leffler_array(alpha, xs)
        assert np.all(values > 0.0)
        assert np.all(values <= 1.0)
        # increasing x towards 0 must not decrease E
        assert np.all(np.diff(values) >= -1e-10)

    @pytest.mark.parametrize("y", [3.9, 4.0, 4.1, 4.2])
    def test_series_and_asymptotic_agree_near_switch(self, y):
        from physics.specfun import mlf_asymptotic, mlf_series
        series, series_err = mlf_series(0.5, y, 200)
        asym, asym_err = mlf_asymptotic(0.5, y)
        assert math.isfinite(series_err) and math.isfinite(asym_err)
        assert series == pytest.approx(asym, abs=1e-6)

    def test_integral_branch_matches_oracle(self):
        from physics.specfun import mlf_integral
        value, err = mlf_integral(0.5, 4.5, 1e-10)
        assert err < 1e-9
        assert value == pytest.approx(erfcx(4.5), abs=1e-9)

    @pytest.mark.parametrize("alpha,x", [(0.0, -1.0), (1.5, -1.0), (0.5, 0.1)])
    def test_domain_errors(self, alpha, x):
        from physics.errors import DomainError
        from physics.specfun import mittag_leffler
        with pytest.raises(DomainError):
            mittag_leffler(alpha, x)

    def test_array_keeps_shape(self):
        from physics.specfun import mittag_leffler_array
        out = mittag_leffler_array(0.5, np.zeros((2, 3)))
        assert out.shape == (2, 3)
        assert np.all(out == 1.0)


class TestHypergeometric:
    def test_origin(self):
        from physics.specfun import hyp2f1_11
        assert hyp2f1_11(0.5, 0.0) == 1.0

    def test_partial_sum_oracle(self):
        from physics.specfun import hyp2f1_11
        alpha, x = 0.5, 0.5
        term, terms = 1.0, []
        for n in range(10_000):
            terms.append(term)
            term *= x * (n + 1.0) / (n + alpha + 2.0)
        assert hyp2f1_11(alpha, x) == pytest.approx(math.fsum(terms), abs=1e-12)

    def test_gauss_sum_at_unit_argument(self):
        """2F1(1,1;4;1) = 3/2, approached by Richardson extrapolation."""
        from physics.specfun import hyp2f1_11
        h = 1e-5
        extrapolated = 2.0 * hyp2f1_11(2.0, 1.0 - h) - hyp2f1_11(2.0, 1.0 - 2.0 * h)
        assert extrapolated == pytest.approx(1.5, abs=1e-6)

    def test_increasing_in_x(self):
        from physics.specfun import hyp2f1_11
        values = [hyp2f1_11(1.5, x) for x in np.linspace(0.0, 0.95, 20)]
        assert np.all(np.diff(values) > 0)

    @pytest.mark.parametrize("alpha,x", [(0.5, 1.0), (0.5, -0.1), (0.0, 0.5)])
    def test_domain_errors(self, alpha, x):
        from physics.errors import DomainError
        from physics.specfun import hyp2f1_11
        with pytest.raises(DomainError):
            hyp2f1_11(alpha, x)

    def test_term_budget_exhausted(self):
        from physics.errors import ConvergenceError
        from physics.specfun import hyp2f1_11
        with pytest.raises(ConvergenceError):
            hyp2f1_11(0.5, 0.999, max_terms=10)
