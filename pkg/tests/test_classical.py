# tests/test_classical.py
"""Tests for the classical standard-map baseline."""
import math
import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest


def _config(K=7.5):
    from physics.models import RotatorConfig
    return RotatorConfig.preset("fast", K=K)


def _quiet():
    from physics.models import NoiseParams, WaitingTimeDist
    return NoiseParams(W=0.0, dist=WaitingTimeDist.deterministic_unit())


def test_zero_kick_keeps_momenta():
    from physics.classical import classical_step
    from physics.models import ClassicalEnsemble
    rng = np.random.default_rng(0)
    ens = ClassicalEnsemble(rng.uniform(0, 2 * math.pi, 100), rng.normal(size=100))
    out = classical_step(ens, 0.0)
    assert np.array_equal(out.momenta, ens.momenta)


def test_angles_stay_in_range():
    from physics.classical import TWO_PI, classical_step
    from physics.models import ClassicalEnsemble
    rng = np.random.default_rng(1)
    ens = ClassicalEnsemble(rng.uniform(0, TWO_PI, 1000), np.zeros(1000))
    for _ in range(50):
        ens = classical_step(ens, 7.5)
        assert np.all((ens.thetas >= 0.0) & (ens.thetas < TWO_PI))


def test_one_kick_variance():
    """Uniform angles give var(K sin theta) = K^2 / 2."""
    from physics.classical import classical_var_series
    var = classical_var_series(_config(), _quiet(), 100_000, 1, seed=0)
    assert var[0] == 0.0
    assert var[1] == pytest.approx(7.5 ** 2 / 2, rel=0.03)


def test_mean_momentum_stays_near_zero():
    from physics.classical import classical_mean_series, classical_var_series
    mean = classical_mean_series(_config(), _quiet(), 10_000, 100, seed=2)
    var = classical_var_series(_config(), _quiet(), 10_000, 100, seed=2)
    assert abs(mean[-1]) < 4 * math.sqrt(var[-1] / 10_000)


def test_unbounded_diffusion():
    """Slope of var p over kicks 100..500 sits near the quasilinear K^2/2."""
    from physics.classical import classical_var_series
    var = classical_var_series(_config(), _quiet(), 10_000, 500, seed=3)
    slope = np.polyfit(np.arange(100, 501), var[100:501], 1)[0]
    assert 0.8 * 7.5 ** 2 / 2 <= slope <= 2.0 * 7.5 ** 2 / 2


def test_deterministic_across_chunking():
    from physics.classical import classical_var_series
    from physics.models import NoiseParams, WaitingTimeDist
    noise = NoiseParams(W=0.5, dist=WaitingTimeDist.yule_simon(0.5))
    a = classical_var_series(_config(), noise, 500, 20, seed=4, chunk=200)
    b = classical_var_series(_config(), noise, 500, 20, seed=4, chunk=200)
    assert np.array_equal(a, b)


def test_noise_changes_trajectories():
    from physics.classical import classical_var_series
    from physics.models import NoiseParams, WaitingTimeDist
    noisy = NoiseParams(W=1.0, dist=WaitingTimeDist.deterministic_unit())
    a = classical_var_series(_config(), _quiet(), 1000, 10, seed=5)
    b = classical_var_series(_config(), noisy, 1000, 10, seed=5)
    assert not np.array_equal(a, b)


def test_invalid_sizes():
    from physics.classical import classical_var_series
    from physics.errors import DomainError
    with pytest.raises(DomainError):
        classical_var_series(_config(), _quiet(), 1, 10, seed=0)
    with pytest.raises(DomainError):
        classical_var_series(_config(), _quiet(), 10, 0, seed=0)
