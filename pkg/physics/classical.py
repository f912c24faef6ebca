# physics/classical.py
"""
Classical standard map under the same renewal amplitude noise.

Particles start at p = 0 with theta uniform on [0, 2 pi). Momenta are not
folded, so the ensemble variance measures unbounded diffusion. Each particle
carries its own renewal timeline, generated on the fly from the position of
its next noise event.
"""
from __future__ import annotations

import math
from typing import Tuple, Union

import numpy as np
from numpy.typing import NDArray

from physics.errors import DomainError
from physics.models import ClassicalEnsemble, NoiseParams, RotatorConfig, WaitingKind
from physics.renewal import default_table_size, realization_rng, sample_waiting_times
from utils.logging import get_logger

log = get_logger("classical")

TWO_PI = 2.0 * math.pi

DEFAULT_CHUNK = 20_000


def classical_step(
    ensemble: ClassicalEnsemble,
    kick_strength_Kt: Union[float, NDArray[np.float64]],
) -> ClassicalEnsemble:
    """p <- p + K_t sin(theta); theta <- (theta + p) mod 2 pi."""
    momenta = ensemble.momenta + kick_strength_Kt * np.sin(ensemble.thetas)
    thetas = np.mod(ensemble.thetas + momenta, TWO_PI)
    # mod can round up to exactly 2 pi for tiny negative arguments
    thetas[thetas >= TWO_PI] = 0.0
    return ClassicalEnsemble(thetas, momenta)


def _chunk_moments(
    config: RotatorConfig,
    noise_params: NoiseParams,
    n: int,
    t_max: int,
    rng: np.random.Generator,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Sums of p and p^2 over n particles at kicks 0..t_max."""
    ens = ClassicalEnsemble(rng.uniform(0.0, TWO_PI, size=n), np.zeros(n))
    dist = noise_params.dist
    W = noise_params.W
    deterministic = dist.kind == WaitingKind.DETERMINISTIC_UNIT
    table_size = None if deterministic else default_table_size()
    next_event = sample_waiting_times(dist, rng, n, table_size)

    s1 = np.zeros(t_max + 1)
    s2 = np.zeros(t_max + 1)
    for t in range(1, t_max + 1):
        kick = np.full(n, config.K)
        if W > 0:
            if deterministic:
                kick += rng.uniform(-W, W, size=n)
            else:
                hit = np.nonzero(next_event == t)[0]
                if hit.size:
                    kick[hit] += rng.uniform(-W, W, size=hit.size)
                    next_event[hit] += sample_waiting_times(dist, rng, hit.size, table_size)
        ens = classical_step(ens, kick)
        s1[t] = ens.momenta.sum()
        s2[t] = np.dot(ens.momenta, ens.momenta)
    return s1, s2


def _classical_moments(
    config: RotatorConfig,
    noise_params: NoiseParams,
    R_cl: int,
    t_max: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    if R_cl < 2:
        raise DomainError(f"classical ensemble needs >= 2 particles, got {R_cl}")
    if t_max < 1:
        raise DomainError(f"t_max must be >= 1, got {t_max}")
    log.info("classical run: R_cl={} t_max={} K={} W={:.4g}", R_cl, t_max, config.K, noise_params.W)
    s1 = np.zeros(t_max + 1)
    s2 = np.zeros(t_max + 1)
    done, c = 0, 0
    while done < R_cl:
        n = min(chunk, R_cl - done)
        a, b = _chunk_moments(config, noise_params, n, t_max, realization_rng(seed, c))
        s1 += a
        s2 += b
        done += n
        c += 1
    mean = s1 / R_cl
    return mean, s2 / R_cl


def classical_var_series(
    config: RotatorConfig,
    noise_params: NoiseParams,
    R_cl: int,
    t_max: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> NDArray[np.float64]:
    """Ensemble variance of p at kicks 0..t_max."""
    mean, second = _classical_moments(config, noise_params, R_cl, t_max, seed, chunk)
    return np.maximum(second - mean ** 2, 0.0)


def classical_mean_series(
    config: RotatorConfig,
    noise_params: NoiseParams,
    R_cl: int,
    t_max: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> NDArray[np.float64]:
    """Ensemble mean of p at kicks 0..t_max."""
    mean, _ = _classical_moments(config, noise_params, R_cl, t_max, seed, chunk)
    return mean
