# physics/renewal.py
"""
Renewal-process layer: waiting-time laws, sampling of noise timelines and
exact counting statistics of the inverse random time.

Conventions:
- Noise events sit on integer kicks t = 1, 2, ...
- N(t) counts events at kicks 1..t; arrays indexed by time have index 0 = t=0
- f[t] is the probability of an event at kick t (f[0] = 0)
- M[t] = E[exp(z N(t))]

Sprinkling distribution and moment-generating function are computed by the
exact integer-time renewal recursions, O(T^2) with vectorized inner sums.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln

from physics.errors import DomainError, HorizonError
from physics.models import NoiseTimeline, RenewalSeries, WaitingKind, WaitingTimeDist
from physics.specfun import hyp2f1_11
from utils.logging import get_logger

log = get_logger("renewal")

# Waiting times are capped here; anything this long never fits a horizon
MAX_WAIT = 2 ** 62


# Truncated-kernel recursions kick in beyond this horizon
TRUNCATION_HORIZON = 100_000
TRUNCATION_SURVIVAL = 1e-10


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for realization `index`, independent of how work is partitioned."""
    return np.random.default_rng([int(master_seed) & (2 ** 64 - 1), int(index)])


def _log_pmf(alpha: float, tau: NDArray[np.float64]) -> NDArray[np.float64]:
    return (math.log(alpha) + gammaln(tau) + gammaln(alpha + 1.0)
            - gammaln(tau + alpha + 1.0))


def _log_survival(alpha: float, k: NDArray[np.float64]) -> NDArray[np.float64]:
    # P(tau > k) = k B(k, alpha + 1) = Gamma(k+1) Gamma(alpha+1) / Gamma(k+alpha+1)
    return gammaln(k + 1.0) + gammaln(alpha + 1.0) - gammaln(k + alpha + 1.0)


def pmf(dist: WaitingTimeDist, tau: int) -> float:
    """omega(tau) for integer tau >= 1."""
    if tau < 1:
        raise DomainError(f"waiting times start at 1, got {tau}")
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        return 1.0 if tau == 1 else 0.0
    return float(np.exp(_log_pmf(dist.alpha, np.float64(tau))))


def pmf_array(dist: WaitingTimeDist, horizon_T: int) -> NDArray[np.float64]:
    """omega(tau) on tau = 0..T with omega(0) = 0."""
    w = np.zeros(horizon_T + 1)
    if horizon_T < 1:
        return w
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        w[1] = 1.0
    else:
        w[1:] = np.exp(_log_pmf(dist.alpha, np.arange(1, horizon_T + 1, dtype=float)))
    return w


def survival(dist: WaitingTimeDist, k: int) -> float:
    """P(tau > k) for k >= 0."""
    if k < 0:
        raise DomainError(f"survival requires k >= 0, got {k}")
    if k == 0:
        return 1.0
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        return 0.0
    return float(np.exp(_log_survival(dist.alpha, np.float64(k))))


def survival_array(dist: WaitingTimeDist, horizon_T: int) -> NDArray[np.float64]:
    """P(tau > k) on k = 0..T."""
    s = np.zeros(horizon_T + 1)
    s[0] = 1.0
    if dist.kind == WaitingKind.YULE_SIMON and horizon_T >= 1:
        s[1:] = np.exp(_log_survival(dist.alpha, np.arange(1, horizon_T + 1, dtype=float)))
    return s


def mean_waiting_time(dist: WaitingTimeDist) -> float:
    return dist.mean_waiting_time


def laplace_waiting_time(dist: WaitingTimeDist, u: float) -> float:
    """w(u) = sum_tau omega(tau) exp(-u tau) for u >= 0."""
    if u < 0:
        raise DomainError(f"Laplace variable must be nonnegative, got {u}")
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        return math.exp(-u)
    if u == 0:
        return 1.0
    a = dist.alpha
    x = math.exp(-u)
    return a / (a + 1.0) * x * hyp2f1_11(a, x)


def laplace_sprinkling(dist: WaitingTimeDist, u: float) -> float:
    """f(u) = sum_t f(t) exp(-u t) = w(u) / (1 - w(u)) for u > 0."""
    if not u > 0:
        raise DomainError(f"sprinkling transform needs u > 0, got {u}")
    w = laplace_waiting_time(dist, u)
    return w / (1.0 - w)


@lru_cache(maxsize=16)
def _survival_table(alpha: float, size: int) -> NDArray[np.float64]:
    """Negated survival -S(k) for k = 1..size, increasing."""
    k = np.arange(1, size + 1, dtype=float)
    return -np.exp(_log_survival(alpha, k))


def _invert_tail(alpha: float, u: NDArray[np.float64], lo: int) -> NDArray[np.int64]:
    """Smallest k > lo with S(k) <= u, by vectorized integer bisection."""
    out = np.full(u.shape, MAX_WAIT, dtype=np.int64)
    pos = u > 0
    if not pos.any():
        return out
    uu = u[pos]
    log_u = np.log(uu)
    # S(k) ~ Gamma(alpha+1) k^-alpha bounds the root from above
    guess = np.exp((gammaln(alpha + 1.0) - log_u) / alpha)
    hi = np.minimum(np.maximum(4.0 * guess + 2.0 * lo + 16.0, lo + 1.0), float(MAX_WAIT))
    hi = hi.astype(np.int64)
    lo_arr = np.full(uu.shape, lo, dtype=np.int64)
    # invariant: S(lo) > u >= S(hi) (or hi is the cap)
    while True:
        open_ = hi - lo_arr > 1
        if not open_.any():
            break
        mid = lo_arr + (hi - lo_arr) // 2
        below = _log_survival(alpha, mid.astype(float)) <= log_u
        hi = np.where(open_ & below, mid, hi)
        lo_arr = np.where(open_ & ~below, mid, lo_arr)
    out[pos] = hi
    return out


def default_table_size() -> int:
    """Sampler lookup-table length from YULE_SIMON_TABLE."""
    from utils.config import load_settings
    size = load_settings().yule_simon_table
    if size < 1:
        raise DomainError(f"YULE_SIMON_TABLE must be >= 1, got {size}")
    return size


def sample_waiting_times(
    dist: WaitingTimeDist,
    rng: np.random.Generator,
    size: int,
    table_size: Optional[int] = None,
) -> NDArray[np.int64]:
    """
    Vectorized inverse-transform sampling of `size` waiting times.

    Draws beyond the lookup table are inverted by bisection on the survival
    function; table_size defaults to the YULE_SIMON_TABLE setting.
    """
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        return np.ones(size, dtype=np.int64)
    if table_size is None:
        table_size = default_table_size()
    u = rng.random(size)
    table = _survival_table(dist.alpha, int(table_size))
    idx = np.searchsorted(table, -u, side="left")
    k = (idx + 1).astype(np.int64)
    beyond = idx >= table.size
    if beyond.any():
        k[beyond] = _invert_tail(dist.alpha, u[beyond], table.size)
    return k


def sample_waiting_time(dist: WaitingTimeDist, rng: np.random.Generator,
                        table_size: Optional[int] = None) -> int:
    """Smallest k >= 1 with survival(k) <= U, U uniform on [0, 1)."""
    return int(sample_waiting_times(dist, rng, 1, table_size)[0])


def generate_timeline(
    dist: WaitingTimeDist,
    horizon_T: int,
    rng: np.random.Generator,
    seed_tag: str = "",
) -> NoiseTimeline:
    """Cumulative sums of i.i.d. waiting times, truncated at the horizon."""
    if horizon_T < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon_T}")
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        return NoiseTimeline(horizon_T, np.arange(1, horizon_T + 1, dtype=np.int64), seed_tag)

    chunks = []
    last = 0
    batch = 64
    table_size = default_table_size()
    while last <= horizon_T:
        draws = np.minimum(sample_waiting_times(dist, rng, batch, table_size), horizon_T + 1)
        times = last + np.cumsum(draws)
        chunks.append(times)
        last = int(times[-1])
        batch = min(batch * 2, 65536)
    events = np.concatenate(chunks)
    events = events[events <= horizon_T]
    return NoiseTimeline(horizon_T, events.astype(np.int64), seed_tag)


def event_mask_batch(
    dist: WaitingTimeDist,
    horizon_T: int,
    n_timelines: int,
    rng: np.random.Generator,
) -> NDArray[np.bool_]:
    """Event indicators of n independent timelines, shape (n, T+1)."""
    mask = np.zeros((n_timelines, horizon_T + 1), dtype=bool)
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        mask[:, 1:] = True
        return mask
    table_size = default_table_size()
    pos = sample_waiting_times(dist, rng, n_timelines, table_size)
    rows = np.arange(n_timelines)
    active = pos <= horizon_T
    while active.any():
        mask[rows[active], pos[active]] = True
        pos[active] += sample_waiting_times(dist, rng, int(active.sum()), table_size)
        active = pos <= horizon_T
    return mask


def _kernel_cutoff(dist: WaitingTimeDist, horizon_T: int) -> int:
    """Largest waiting time kept in the recursions."""
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT or horizon_T <= TRUNCATION_HORIZON:
        return horizon_T
    s = survival_array(dist, horizon_T)
    small = np.nonzero(s < TRUNCATION_SURVIVAL)[0]
    if small.size == 0:
        return horizon_T
    cut = int(small[0])
    log.info("truncating renewal kernel at tau={} (neglected tail {:.1e})", cut, s[cut])
    return cut


def sprinkling(dist: WaitingTimeDist, horizon_T: int) -> NDArray[np.float64]:
    """
    f[t] for t = 0..T from f(t) = omega(t) + sum_{tau<t} omega(tau) f(t - tau).
    """
    if horizon_T < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon_T}")
    f = np.zeros(horizon_T + 1)
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        f[1:] = 1.0
        return f
    w = pmf_array(dist, horizon_T)
    cut = _kernel_cutoff(dist, horizon_T)
    log.debug("sprinkling recursion T={} ({})", horizon_T, dist.label)
    for t in range(1, horizon_T + 1):
        m = min(t - 1, cut)
        acc = np.dot(w[1:m + 1], f[t - m:t][::-1]) if m > 0 else 0.0
        f[t] = w[t] + acc
    return np.clip(f, 0.0, 1.0)


def mean_inverse_time(dist: WaitingTimeDist, horizon_T: int,
                      f: Optional[NDArray[np.float64]] = None) -> NDArray[np.float64]:
    """Nbar(t) = sum_{s<=t} f(s) on t = 0..T."""
    if f is None:
        f = sprinkling(dist, horizon_T)
    return np.cumsum(f[: horizon_T + 1])


def mgf_inverse_time(dist: WaitingTimeDist, z: float, horizon_T: int) -> NDArray[np.float64]:
    """
    M(z; t, 0) for t = 0..T by first-event decomposition
    M(t) = S(t) + e^z sum_{tau<=t} omega(tau) M(t - tau).

    Valid for any real z; nonincreasing in t for z < 0.
    """
    if horizon_T < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon_T}")
    t = np.arange(horizon_T + 1)
    if z == 0:
        return np.ones(horizon_T + 1)
    if dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        return np.exp(z * t)
    w = pmf_array(dist, horizon_T)
    s = survival_array(dist, horizon_T)
    ez = math.exp(z)
    cut = _kernel_cutoff(dist, horizon_T)
    M = np.empty(horizon_T + 1)
    M[0] = 1.0
    for n in range(1, horizon_T + 1):
        m = min(n, cut)
        M[n] = s[n] + ez * np.dot(w[1:m + 1], M[n - m:n][::-1])
    return M


def mgf_two_time(
    dist: WaitingTimeDist,
    z: float,
    t_prime: int,
    t_dprime: int,
    *,
    f: Optional[NDArray[np.float64]] = None,
    M: Optional[NDArray[np.float64]] = None,
) -> float:
    """
    E[exp(z N(t', t''))] = M(t') - (e^z - 1) sum_{s=1}^{t''} f(s) M(t' - s).

    Precomputed f and M (covering t') may be passed to avoid recomputation.
    """
    if t_dprime > t_prime:
        raise DomainError(f"t''={t_dprime} exceeds t'={t_prime}")
    if t_dprime < 0:
        raise DomainError("times must be nonnegative")
    if t_prime == t_dprime:
        return 1.0
    if f is None:
        f = sprinkling(dist, max(t_prime, 1))
    if M is None:
        M = mgf_inverse_time(dist, z, max(t_prime, 1))
    if len(f) <= t_prime or len(M) <= t_prime:
        raise HorizonError(f"precomputed series shorter than t'={t_prime}")
    if t_dprime == 0:
        return float(M[t_prime])
    s = np.arange(1, t_dprime + 1)
    return float(M[t_prime] - math.expm1(z) * np.dot(f[s], M[t_prime - s]))


def random_time_distribution(dist: WaitingTimeDist, n_events: int,
                             horizon_T: int) -> NDArray[np.float64]:
    """P(t_N = t) on t = 0..T: n-fold self-convolution of the waiting-time pmf."""
    if n_events < 1:
        raise DomainError(f"n_events must be >= 1, got {n_events}")
    w = pmf_array(dist, horizon_T)
    p = w.copy()
    for _ in range(n_events - 1):
        p = np.convolve(p, w)[: horizon_T + 1]
    return p


def counting_distribution(dist: WaitingTimeDist, n_events: int, horizon_T: int) -> float:
    """P(N(T) = n) = sum_{t<=T} [P(t; n) - P(t; n+1)], with P(t; 0) = delta_{t,0}."""
    if n_events < 0:
        raise DomainError(f"n_events must be >= 0, got {n_events}")
    upper = random_time_distribution(dist, n_events + 1, horizon_T).sum()
    if n_events == 0:
        return float(1.0 - upper)
    lower = random_time_distribution(dist, n_events, horizon_T).sum()
    return float(lower - upper)


def renewal_series(dist: WaitingTimeDist, horizon_T: int,
                   z_values: Iterable[float] = ()) -> RenewalSeries:
    """Sprinkling, mean count and MGFs for the requested z on t = 0..T."""
    f = sprinkling(dist, horizon_T)
    nbar = mean_inverse_time(dist, horizon_T, f)
    mgf: Dict[float, NDArray[np.float64]] = {
        float(z): mgf_inverse_time(dist, float(z), horizon_T) for z in z_values
    }
    return RenewalSeries(dist, horizon_T, f, nbar, mgf)


def monte_carlo_counts(
    dist: WaitingTimeDist,
    horizon_T: int,
    n_timelines: int,
    master_seed: int,
    block: int = 10_000,
) -> Tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.int64]]:
    """
    Empirical event rate per kick, its standard error, and final counts N(T).

    Timelines are generated in blocks, block b seeded from (master_seed, b).
    """
    hits = np.zeros(horizon_T + 1)
    counts = np.empty(n_timelines, dtype=np.int64)
    done = 0
    b = 0
    while done < n_timelines:
        n = min(block, n_timelines - done)
        mask = event_mask_batch(dist, horizon_T, n, realization_rng(master_seed, b))
        hits += mask.sum(axis=0)
        counts[done:done + n] = mask.sum(axis=1)
        done += n
        b += 1
    rate = hits / n_timelines
    se = np.sqrt(rate * (1.0 - rate) / n_timelines)
    return rate, se, counts

