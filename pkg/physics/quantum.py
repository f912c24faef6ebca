# physics/quantum.py
"""
Quantum kicked rotator on the N-dimensional momentum lattice.

- make_initial_state / floquet_step / inverse_floquet_step: state handling
- propagate: one noise realization, per-kick moments and IPR
- ensemble_run: R realizations in lockstep, purity and log-fidelity at
  sample times
- momentum_distribution: rebinned ensemble-averaged density P(p; t)

States are arrays in FFT order (see RotatorConfig.levels); leading axes are
batch axes, so every step function also works on an (R, N) ensemble.
The Floquet step applies exp(-i K_t cos(theta)/hbar) in the angle
representation and then exp(-i p^2 / (2 hbar)) in momentum.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.fft as sfft
from numpy.typing import NDArray
from scipy.special import jv

from physics.errors import ConvergenceError, DomainError, HorizonError
from physics.models import (
    NoiseParams,
    NoiseRealization,
    ObservableSeries,
    QuantumState,
    RotatorConfig,
)
from physics.renewal import generate_timeline, realization_rng
from utils.logging import get_logger

log = get_logger("quantum")

# fraction of the lattice at each end watched for wrap-around
EDGE_FRACTION = 0.05
EDGE_MASS_LIMIT = 1e-6

# overlaps below this are treated as underflow in the log-fidelity
OVERLAP_FLOOR = 1e-300

FULL_PAIR_LIMIT = 64

# seed-sequence word reserved for the purity pair sampler
_PAIR_STREAM = 0x5EED_0F_FA1125


def make_initial_state(config: RotatorConfig, level: int = 0) -> QuantumState:
    """Momentum eigenstate |l>, by default the zero-momentum state."""
    psi = np.zeros(config.N, dtype=np.complex128)
    psi[config.level_index(level)] = 1.0
    return psi


def _cos_over_hbar(config: RotatorConfig) -> NDArray[np.float64]:
    return np.cos(config.angle_grid) / config.hbar


def kick_phase(config: RotatorConfig, kick_strength: float) -> NDArray[np.complex128]:
    return np.exp(-1j * kick_strength * _cos_over_hbar(config))


def rotation_phase(config: RotatorConfig) -> NDArray[np.complex128]:
    """exp(-i hbar l^2 / 2) = exp(-i p^2 / (2 hbar)) over the lattice."""
    # hbar l^2 / 2 = pi M l^2 / N; reduce the integer M l^2 mod 2N first
    l = config.levels
    residue = np.mod(config.M * l * l, 2 * config.N).astype(np.float64)
    return np.exp(-1j * math.pi * residue / config.N)


def _to_angle(psi: NDArray[np.complex128], workers: int = 1) -> NDArray[np.complex128]:
    return sfft.ifft(psi, axis=-1, norm="forward", workers=workers)


def _to_momentum(psi_theta: NDArray[np.complex128], workers: int = 1) -> NDArray[np.complex128]:
    return sfft.fft(psi_theta, axis=-1, norm="forward", workers=workers, overwrite_x=True)


def floquet_step(
    state: QuantumState,
    kick_strength_Kt: float,
    config: RotatorConfig,
    *,
    rotation: Optional[NDArray[np.complex128]] = None,
) -> QuantumState:
    """One period: kick with strength K_t, then free rotation."""
    rot = rotation_phase(config) if rotation is None else rotation
    psi_theta = _to_angle(state)
    psi_theta *= kick_phase(config, kick_strength_Kt)
    psi = _to_momentum(psi_theta)
    psi *= rot
    return psi


def inverse_floquet_step(
    state: QuantumState,
    kick_strength_Kt: float,
    config: RotatorConfig,
) -> QuantumState:
    """Undo floquet_step: inverse rotation, then inverse kick."""
    psi = state * np.conj(rotation_phase(config))
    psi_theta = _to_angle(psi)
    psi_theta *= np.conj(kick_phase(config, kick_strength_Kt))
    return _to_momentum(psi_theta)


def one_kick_probabilities(config: RotatorConfig, K: Optional[float] = None,
                           max_level: int = 60) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Jacobi-Anger probabilities J_l(K/hbar)^2 for |l| <= max_level."""
    K = config.K if K is None else K
    l = np.arange(-max_level, max_level + 1)
    return l, jv(l, K / config.hbar) ** 2


def _probabilities(psi: NDArray[np.complex128]) -> NDArray[np.float64]:
    return psi.real ** 2 + psi.imag ** 2


def _edge_mask(config: RotatorConfig) -> NDArray[np.bool_]:
    lo, hi = -(config.N // 2), config.N - config.N // 2
    width = max(1, int(round(EDGE_FRACTION * config.N)))
    levels = config.levels
    return (levels < lo + width) | (levels >= hi - width)


def edge_mass(probs: NDArray[np.float64], config: RotatorConfig) -> float:
    """Largest probability within EDGE_FRACTION of either lattice end."""
    mass = probs[..., _edge_mask(config)].sum(axis=-1)
    return float(np.max(mass))


def momentum_moments(state: QuantumState, config: RotatorConfig,
                     warn: bool = True) -> Tuple[float, float]:
    """(<p>, var p) in the momentum basis."""
    probs = _probabilities(state)
    p = config.momenta
    mean = float(probs @ p)
    var = float(probs @ (p * p)) - mean * mean
    if warn:
        mass = edge_mass(probs, config)
        if mass > EDGE_MASS_LIMIT:
            log.warning("momentum mass {:.2e} near the lattice edge; wrap-around likely", mass)
    return mean, max(var, 0.0)


def ipr(state: QuantumState) -> float:
    probs = _probabilities(state)
    return float(np.sum(probs * probs))


def ensemble_ipr(states: NDArray[np.complex128]) -> float:
    """Arithmetic mean of the per-state IPR."""
    probs = _probabilities(np.atleast_2d(states))
    return float(np.mean(np.einsum("ij,ij->i", probs, probs)))


def _pair_overlaps(states: NDArray[np.complex128], i: NDArray[np.int64],
                   j: NDArray[np.int64]) -> NDArray[np.float64]:
    amp = np.einsum("ij,ij->i", np.conj(states[i]), states[j])
    return _probabilities(amp)


def purity_estimate(
    states: NDArray[np.complex128],
    rng: Optional[np.random.Generator] = None,
    full_pair_limit: int = FULL_PAIR_LIMIT,
) -> Tuple[float, float]:
    """
    Mean |<psi_i|psi_j>|^2 over unordered pairs i != j, with standard error.

    All pairs are used for R <= full_pair_limit; otherwise 64 R pairs are drawn
    uniformly. Excluding i = j removes the 1/R bias of tr(rho^2).
    """
    R = states.shape[0]
    if R < 2:
        raise DomainError(f"purity needs at least 2 realizations, got {R}")
    if R <= full_pair_limit:
        i, j = np.triu_indices(R, k=1)
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        n = FULL_PAIR_LIMIT * R
        i = rng.integers(0, R, size=n)
        j = rng.integers(0, R - 1, size=n)
        j = j + (j >= i)
    values = _pair_overlaps(states, i, j)
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se


def log_fidelity_estimate(states: NDArray[np.complex128]) -> Tuple[float, float, int]:
    """
    Mean of ln|<psi_i|psi_j>|^2 over disjoint pairs (0,1), (2,3), ...

    Returns (mean, standard error, skipped pairs). Pairs whose overlap is
    below OVERLAP_FLOOR are skipped and counted.
    """
    R = states.shape[0]
    if R < 2:
        raise DomainError(f"log-fidelity needs at least 2 realizations, got {R}")
    i = np.arange(0, R - 1, 2)
    values = _pair_overlaps(states, i, i + 1)
    keep = values >= OVERLAP_FLOOR
    skipped = int((~keep).sum())
    if skipped:
        log.warning("{} of {} fidelity pairs underflowed and were skipped", skipped, values.size)
    if not keep.any():
        raise ConvergenceError("every fidelity overlap underflowed")
    logs = np.log(values[keep])
    se = float(logs.std(ddof=1) / math.sqrt(logs.size)) if logs.size > 1 else 0.0
    return float(logs.mean()), se, skipped


def rebin_probabilities(
    probs: NDArray[np.float64],
    config: RotatorConfig,
    rebin_width: int = 24,
    p_star: Optional[float] = None,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Group FFT-ordered level probabilities into bins of rebin_width levels.

    Bins are aligned so level 0 sits in the middle of the central bin.
    Returns (bin centers, density); with p_star the centers are p/p_star and
    the density is per unit p/p_star.
    """
    if rebin_width < 1:
        raise DomainError("rebin_width must be >= 1")
    levels = config.levels
    bins = np.floor_divide(levels + rebin_width // 2, rebin_width)
    bins -= bins.min()
    counts = np.bincount(bins)
    mass = np.bincount(bins, weights=probs)
    centers = config.hbar * np.bincount(bins, weights=levels.astype(float)) / counts
    density = mass / (config.hbar * counts)
    if p_star is not None:
        centers = centers / p_star
        density = density * p_star
    return centers, density


def momentum_distribution(
    states: NDArray[np.complex128],
    config: RotatorConfig,
    rebin_width: int = 24,
    p_star: Optional[float] = None,
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Ensemble-averaged |psi_l|^2 as a rebinned density over p."""
    probs = _probabilities(np.atleast_2d(states)).mean(axis=0)
    return rebin_probabilities(probs, config, rebin_width, p_star)


@dataclass
class PropagationTrack:
    """Per-kick record of one realization, arrays over kicks 0..t_max."""
    mean_p: NDArray[np.float64]
    second_moment: NDArray[np.float64]
    ipr: NDArray[np.float64]
    snapshots: Dict[int, QuantumState] = field(default_factory=dict)
    final_state: Optional[QuantumState] = None

    @property
    def var_p(self) -> NDArray[np.float64]:
        return np.maximum(self.second_moment - self.mean_p ** 2, 0.0)


def sample_noise(noise_params: NoiseParams, t_max: int, rng: np.random.Generator,
                 seed_tag: str = "") -> NoiseRealization:
    """Timeline first, then one uniform(-W, W) detuning per event."""
    timeline = generate_timeline(noise_params.dist, t_max, rng, seed_tag)
    detunings = rng.uniform(-noise_params.W, noise_params.W, size=timeline.event_times.size)
    return NoiseRealization(timeline, detunings)


def propagate(
    state: QuantumState,
    noise: NoiseRealization,
    config: RotatorConfig,
    t_max: int,
    sample_times: Iterable[int] = (),
) -> PropagationTrack:
    """Propagate one realization for t_max kicks."""
    if t_max > noise.timeline.horizon_T:
        raise HorizonError(f"t_max={t_max} beyond noise horizon {noise.timeline.horizon_T}")
    keep = set(int(t) for t in sample_times)
    p = config.momenta
    p2 = p * p
    rot = rotation_phase(config)
    base = kick_phase(config, config.K)
    cos_h = _cos_over_hbar(config)
    detuning = np.zeros(t_max + 1)
    hit = noise.timeline.event_times <= t_max
    detuning[noise.timeline.event_times[hit]] = noise.detunings[hit]
    event = np.zeros(t_max + 1, dtype=bool)
    event[noise.timeline.event_times[hit]] = True

    mean_p = np.empty(t_max + 1)
    second = np.empty(t_max + 1)
    iprs = np.empty(t_max + 1)
    snapshots: Dict[int, QuantumState] = {}

    psi = np.array(state, dtype=np.complex128)
    probs = _probabilities(psi)
    mean_p[0], second[0], iprs[0] = probs @ p, probs @ p2, probs @ probs
    if 0 in keep:
        snapshots[0] = psi.copy()
    for t in range(1, t_max + 1):
        psi_theta = _to_angle(psi)
        psi_theta *= base
        if event[t]:
            psi_theta *= np.exp(-1j * detuning[t] * cos_h)
        psi = _to_momentum(psi_theta)
        psi *= rot
        probs = _probabilities(psi)
        mean_p[t], second[t], iprs[t] = probs @ p, probs @ p2, probs @ probs
        if t in keep:
            snapshots[t] = psi.copy()

    mass = edge_mass(probs, config)
    if mass > EDGE_MASS_LIMIT:
        log.warning("momentum mass {:.2e} near the lattice edge at t={}", mass, t_max)
    return PropagationTrack(mean_p, second, iprs, snapshots, psi)


class _LockstepEnsemble:
    """R states advanced kick by kick; rows are owned by one block at a time."""

    def __init__(self, config: RotatorConfig, detuning: NDArray[np.float64],
                 event: NDArray[np.bool_], initial_levels: Sequence[int]):
        R, horizon = event.shape
        self.config = config
        self.detuning = detuning
        self.event = event
        self.states = np.zeros((R, config.N), dtype=np.complex128)
        for r, level in enumerate(initial_levels):
            self.states[r, config.level_index(level)] = 1.0
        self.rotation = rotation_phase(config)
        self.base_kick = kick_phase(config, config.K)
        self.cos_h = _cos_over_hbar(config)
        self.p = config.momenta
        self.p2 = self.p * self.p
        self.mean_p = np.zeros((R, horizon))
        self.second = np.zeros((R, horizon))
        self.ipr = np.zeros((R, horizon))
        self._record(slice(0, R), 0)

    def _record(self, rows: slice, t: int) -> None:
        probs = _probabilities(self.states[rows])
        self.mean_p[rows, t] = probs @ self.p
        self.second[rows, t] = probs @ self.p2
        self.ipr[rows, t] = np.einsum("ij,ij->i", probs, probs)

    def advance(self, rows: slice, t_from: int, t_to: int) -> None:
        psi = self.states[rows]
        for t in range(t_from + 1, t_to + 1):
            psi_theta = _to_angle(psi)
            psi_theta *= self.base_kick
            hit = np.nonzero(self.event[rows, t])[0]
            if hit.size:
                extra = np.exp(-1j * np.outer(self.detuning[rows, t][hit], self.cos_h))
                psi_theta[hit] *= extra
            psi = _to_momentum(psi_theta)
            psi *= self.rotation
            probs = _probabilities(psi)
            self.mean_p[rows, t] = probs @ self.p
            self.second[rows, t] = probs @ self.p2
            self.ipr[rows, t] = np.einsum("ij,ij->i", probs, probs)
        self.states[rows] = psi


def _noise_matrices(noise_params: NoiseParams, R: int, t_max: int,
                    master_seed: int) -> Tuple[NDArray[np.float64], NDArray[np.bool_]]:
    detuning = np.zeros((R, t_max + 1))
    event = np.zeros((R, t_max + 1), dtype=bool)
    for r in range(R):
        noise = sample_noise(noise_params, t_max, realization_rng(master_seed, r),
                             seed_tag=f"{master_seed}:{r}")
        times = noise.timeline.event_times
        event[r, times] = True
        detuning[r, times] = noise.detunings
    return detuning, event


def _blocks(R: int, workers: int) -> List[slice]:
    edges = np.linspace(0, R, min(workers, R) + 1).round().astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def ensemble_run(
    config: RotatorConfig,
    noise_params: NoiseParams,
    R: int,
    t_max: int,
    sample_times: Sequence[int],
    master_seed: int,
    *,
    workers: int = 1,
    snapshot_times: Optional[Sequence[int]] = None,
    initial_level: int = 0,
) -> ObservableSeries:
    """
    Propagate R independent realizations and reduce the observables.

    Realization r draws its timeline and detunings from
    realization_rng(master_seed, r). Rows are split into `workers` blocks
    advanced by a thread pool between sample times; all reductions run over
    realization index order, so the result does not depend on the block split.
    var p is computed per realization and then averaged.
    """
    if R < 2:
        raise DomainError(f"ensemble_run needs R >= 2, got {R}")
    if t_max < 1:
        raise DomainError(f"t_max must be >= 1, got {t_max}")
    times = np.unique(np.asarray(list(sample_times), dtype=np.int64))
    if times.size == 0 or times[0] < 0 or times[-1] > t_max:
        raise DomainError(f"sample times must lie in [0, {t_max}]")
    snaps = set(int(t) for t in (times if snapshot_times is None else snapshot_times))
    if any(t < 0 or t > t_max for t in snaps):
        raise DomainError(f"snapshot times must lie in [0, {t_max}]")
    checkpoints = np.union1d(times, np.fromiter(snaps, dtype=np.int64, count=len(snaps)))

    log.info("ensemble run: N={} R={} t_max={} W={:.4g} ({}) workers={}",
             config.N, R, t_max, noise_params.W, noise_params.dist.label, workers)
    detuning, event = _noise_matrices(noise_params, R, t_max, master_seed)
    ens = _LockstepEnsemble(config, detuning, event, [initial_level] * R)
    blocks = _blocks(R, max(1, workers))
    pair_rng = np.random.default_rng([int(master_seed) & (2 ** 64 - 1), _PAIR_STREAM])

    purity = np.empty(times.size)
    purity_se = np.empty(times.size)
    logfid = np.empty(times.size)
    logfid_se = np.empty(times.size)
    snapshots: Dict[int, NDArray[np.float64]] = {}
    skipped = 0
    edge_warned = False
    slot = {int(t): k for k, t in enumerate(times)}

    pool = ThreadPoolExecutor(max_workers=len(blocks)) if len(blocks) > 1 else None
    try:
        t_prev = 0
        for t in checkpoints.tolist():
            if t > t_prev:
                if pool is None:
                    ens.advance(blocks[0], t_prev, t)
                else:
                    list(pool.map(lambda rows: ens.advance(rows, t_prev, t), blocks))
                t_prev = t
            if t in slot:
                k = slot[t]
                purity[k], purity_se[k] = purity_estimate(ens.states, pair_rng)
                logfid[k], logfid_se[k], n_skip = log_fidelity_estimate(ens.states)
                skipped += n_skip
            if t in snaps:
                snapshots[t] = _probabilities(ens.states).mean(axis=0)
            if not edge_warned:
                mass = edge_mass(_probabilities(ens.states), config)
                if mass > EDGE_MASS_LIMIT:
                    log.warning("momentum mass {:.2e} near the lattice edge at t={}", mass, t)
                    edge_warned = True
    finally:
        if pool is not None:
            pool.shutdown()

    kick_var = np.maximum(ens.second - ens.mean_p ** 2, 0.0).mean(axis=0)
    kick_ipr = ens.ipr.mean(axis=0)
    kick_mean = ens.mean_p.mean(axis=0)
    kick_mean_se = ens.mean_p.std(axis=0, ddof=1) / math.sqrt(R)
    log.info("ensemble run done: var p(t_max)={:.4g} purity(t_max)={:.4g} max |<p>|={:.2g}",
             kick_var[-1], purity[-1], float(np.abs(kick_mean).max()))
    return ObservableSeries(
        times=times,
        var_p=kick_var[times],
        ipr=kick_ipr[times],
        purity=purity,
        purity_se=purity_se,
        log_fidelity=logfid,
        log_fidelity_se=logfid_se,
        kick_var_p=kick_var,
        kick_ipr=kick_ipr,
        kick_mean_p=kick_mean,
        kick_mean_p_se=kick_mean_se,
        snapshots=snapshots,
        realizations=R,
        skipped_fidelity_pairs=skipped,
    )


def noiseless_reference(
    config: RotatorConfig,
    t_max: int,
    initial_levels: Sequence[int] = (0,),
) -> NDArray[np.float64]:
    """var p0(t) on t = 0..t_max, averaged over the given initial levels."""
    levels = list(initial_levels)
    if not levels:
        raise DomainError("at least one initial level is required")
    R = len(levels)
    ens = _LockstepEnsemble(config, np.zeros((R, t_max + 1)),
                            np.zeros((R, t_max + 1), dtype=bool), levels)
    log.info("noiseless reference: N={} K={} t_max={} levels={}", config.N, config.K, t_max, levels)
    ens.advance(slice(0, R), 0, t_max)
    mass = edge_mass(_probabilities(ens.states), config)
    if mass > EDGE_MASS_LIMIT:
        log.warning("momentum mass {:.2e} near the lattice edge at t={}", mass, t_max)
    return np.maximum(ens.second - ens.mean_p ** 2, 0.0).mean(axis=0)



def mean_momentum_within(obs: ObservableSeries, n_se: float = 4.0) -> bool:
    """Ensemble <p>(t) within n_se standard errors of zero at every kick."""
    floor = 1e-9 * math.sqrt(max(float(obs.kick_var_p.max()), 1.0))
    return bool(np.all(np.abs(obs.kick_mean_p) <= n_se * obs.kick_mean_p_se + floor))
