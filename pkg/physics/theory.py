# physics/theory.py
"""
Analytic predictions for the noisy rotator.

- var_p0: localized spreading D* t* (1 - exp(-t/t*))
- decoherence_factor: D(t', t'') = E[exp(-N(t', t'')/t_c)], exact renewal MGF
- var_p_prediction: var p(t) = sum_{t', t'' < t} c0(|t' - t''|) D(t', t'')
  + (kappa/2) Nbar(t), with c0 the force correlation recovered from var_p0
- var_p_crossover / var_p_subdiffusive: closed forms for stationary and
  Levy noise
- ipr_prediction, purity_prediction, logfid_prediction

The double sum is accumulated row by row, so one pass to T yields every
t <= T; cost is O(T^2) with vectorized rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gamma

from physics.errors import DomainError, HorizonError
from physics.models import Profile, TheoryParams, TheorySeries, WaitingKind, WaitingTimeDist
from physics.renewal import mgf_inverse_time, mgf_two_time, sprinkling
from physics.specfun import DEFAULT_POLICY, MlfEvalPolicy, mittag_leffler
from utils.logging import get_logger

log = get_logger("theory")

Times = Union[int, float, ArrayLike]


def _as_times(t: Times) -> NDArray[np.float64]:
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0):
        raise DomainError("times must be nonnegative")
    return arr


def _scalar_or_array(values: NDArray[np.float64], like: Times):
    return float(values) if np.ndim(like) == 0 else values


@dataclass(frozen=True, eq=False)
class RenewalTables:
    """Sprinkling, mean count and MGF at z = -1/t_c on t = 0..horizon."""
    horizon: int
    z: float
    f: NDArray[np.float64]
    nbar: NDArray[np.float64]
    M: NDArray[np.float64]

    @classmethod
    def build(cls, params: TheoryParams, horizon: int) -> "RenewalTables":
        if horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {horizon}")
        z = -1.0 / params.t_c if params.kappa > 0 else 0.0
        t = np.arange(horizon + 1, dtype=np.float64)
        if params.dist.kind == WaitingKind.DETERMINISTIC_UNIT:
            f = np.ones(horizon + 1)
            f[0] = 0.0
            return cls(horizon, z, f, t.copy(), np.exp(z * t))
        log.debug("renewal tables to T={} for {}", horizon, params.dist.label)
        f = sprinkling(params.dist, horizon)
        M = mgf_inverse_time(params.dist, z, horizon)
        return cls(horizon, z, f, np.cumsum(f), M)

    def check(self, t_max: int) -> None:
        if t_max > self.horizon:
            raise HorizonError(f"t={t_max} beyond renewal tables horizon {self.horizon}")

    def decoherence_row(self, t_prime: int) -> NDArray[np.float64]:
        """D(t', t'') for t'' = 0..t'-1."""
        if t_prime == 0:
            return np.empty(0)
        g = np.cumsum(self.f[1:t_prime + 1] * self.M[t_prime - 1::-1])
        row = np.empty(t_prime)
        row[0] = self.M[t_prime]
        row[1:] = self.M[t_prime] - math.expm1(self.z) * g[:-1]
        return np.clip(row, 0.0, 1.0)


def var_p0(t: Times, D_star: float, t_star: float):
    """D* t* [1 - exp(-t/t*)]."""
    tt = _as_times(t)
    return _scalar_or_array(-D_star * t_star * np.expm1(-tt / t_star), t)


def decoherence_factor(
    params: TheoryParams,
    t_prime: int,
    t_dprime: int,
    tables: Optional[RenewalTables] = None,
) -> float:
    """E[exp(z N(t', t''))] at z = -1/t_c."""
    if t_dprime > t_prime:
        raise DomainError(f"t''={t_dprime} exceeds t'={t_prime}")
    if t_dprime < 0:
        raise DomainError("times must be nonnegative")
    if t_prime == t_dprime or params.kappa == 0:
        return 1.0
    if params.dist.kind == WaitingKind.DETERMINISTIC_UNIT:
        return math.exp(-(t_prime - t_dprime) / params.t_c)
    if tables is None:
        tables = RenewalTables.build(params, t_prime)
    tables.check(t_prime)
    return mgf_two_time(params.dist, tables.z, t_prime, t_dprime, f=tables.f, M=tables.M)


def decoherence_ml_approx(
    alpha: float,
    t_c: float,
    nbar_t: float,
    policy: MlfEvalPolicy = DEFAULT_POLICY,
) -> float:
    """Mittag-Leffler approximation E_alpha[-Gamma(1 + alpha) Nbar(t) / t_c]."""
    if not 0 < alpha < 1:
        raise DomainError(f"Mittag-Leffler approximation needs 0 < alpha < 1, got {alpha}")
    if nbar_t < 0:
        raise DomainError("mean count must be nonnegative")
    if nbar_t == 0 or math.isinf(t_c):
        return 1.0
    return mittag_leffler(alpha, -gamma(1.0 + alpha) * nbar_t / t_c, policy)


def decoherence_power_law(alpha: float, c: float, t_c: float, t: Times):
    """Long-time tail (c t_c / alpha) t^-alpha of D(t, 0) for alpha < 1."""
    tt = _as_times(t)
    with np.errstate(divide="ignore"):
        return _scalar_or_array(c * t_c / alpha * tt ** (-alpha), t)


def mgf_stationary_asymptote(z: float, t: Times, mean_tau: float):
    """exp[(e^z - 1) t / tau_bar] for finite mean waiting time."""
    tt = _as_times(t)
    return _scalar_or_array(np.exp(math.expm1(z) * tt / mean_tau), t)


def mgf_ml_asymptote(alpha: float, c: float, z: float, t: float,
                     policy: MlfEvalPolicy = DEFAULT_POLICY) -> float:
    """E_alpha[t^alpha (e^z - 1) Gamma(1 + alpha) sin(pi alpha) / (pi c)]."""
    if not 0 < alpha < 1:
        raise DomainError(f"needs 0 < alpha < 1, got {alpha}")
    if z > 0:
        raise DomainError("z must be nonpositive")
    x = t ** alpha * math.expm1(z) * gamma(1.0 + alpha) * math.sin(math.pi * alpha) / (math.pi * c)
    return mittag_leffler(alpha, x, policy)


def noiseless_force_correlation(var_p0_series: ArrayLike) -> NDArray[np.float64]:
    """
    c0(0) = V(1); c0(d) = [V(d+1) - 2 V(d) + V(d-1)] / 2 for d >= 1.

    Input covers t = 0..T with V(0) = 0; output covers d = 0..T-1.
    """
    V = np.asarray(var_p0_series, dtype=np.float64)
    if V.ndim != 1 or V.size < 2:
        raise DomainError("need V(t) on at least t = 0, 1")
    if V[0] != 0:
        raise DomainError(f"V(0) must be 0, got {V[0]}")
    c0 = np.empty(V.size - 1)
    c0[0] = V[1]
    c0[1:] = 0.5 * (V[2:] - 2.0 * V[1:-1] + V[:-2])
    return c0


def _double_sum(c0: NDArray[np.float64], tables: Optional[RenewalTables],
                horizon: int, z: float, deterministic: bool) -> NDArray[np.float64]:
    """S(t) = sum_{a, b < t} c0(|a - b|) D(max, min) on t = 0..horizon."""
    S = np.zeros(horizon + 1)
    decay = np.exp(z * np.arange(horizon, dtype=np.float64))
    for t in range(horizon):
        if t == 0:
            r = 0.0
        else:
            if deterministic or tables is None:
                # D(t, b) = exp(z (t - b)), lags t..1
                row = decay[t:0:-1]
            else:
                row = tables.decoherence_row(t)
            r = float(np.dot(c0[t:0:-1], row))
        S[t + 1] = S[t] + c0[0] + 2.0 * r
    return S


def var_p_prediction(
    params: TheoryParams,
    t: Times,
    tables: Optional[RenewalTables] = None,
    horizon: Optional[int] = None,
):
    """
    Discrete variance formula evaluated at the requested times.

    var p0 enters through the fitted law var_p0(t, D*, t*); the same pass
    yields every t up to the largest requested time.
    """
    tt = _as_times(t)
    t_int = np.rint(tt).astype(np.int64)
    T = int(t_int.max()) if t_int.size else 0
    if horizon is not None and T > horizon:
        raise HorizonError(f"t={T} beyond prediction horizon {horizon}")
    series = var_p_prediction_series(params, max(T, 1), tables)
    return _scalar_or_array(series[t_int], t)


def var_p_prediction_series(params: TheoryParams, horizon: int,
                            tables: Optional[RenewalTables] = None) -> NDArray[np.float64]:
    """var p prediction on every kick t = 0..horizon."""
    V = var_p0(np.arange(horizon + 1), params.D_star, params.t_star)
    c0 = noiseless_force_correlation(V)
    deterministic = params.dist.kind == WaitingKind.DETERMINISTIC_UNIT
    if params.kappa == 0:
        log.debug("kappa = 0: prediction reduces to var p0")
        S = _double_sum(c0, None, horizon, 0.0, True)
        return np.maximum(S, 0.0)
    if tables is None:
        tables = RenewalTables.build(params, horizon)
    tables.check(horizon)
    S = _double_sum(c0, tables, horizon, tables.z, deterministic)
    noise = 0.5 * params.kappa * tables.nbar[: horizon + 1]
    return np.maximum(S + noise, 0.0)


def var_p_crossover(t: Times, D_star: float, t_star: float, t_c_eff: float):
    """
    D*/(1 + t_c/t*) t + D* t*/(1 + t*/t_c)^2 [1 - exp(-t/t* - t/t_c)]
    with t_c the effective decoherence time.
    """
    tt = _as_times(t)
    inv_tc = 0.0 if math.isinf(t_c_eff) else 1.0 / t_c_eff
    slope = D_star / (1.0 + t_c_eff / t_star) if inv_tc > 0 else 0.0
    sat = D_star * t_star / (1.0 + t_star * inv_tc) ** 2
    values = slope * tt - sat * np.expm1(-tt / t_star - tt * inv_tc)
    return _scalar_or_array(values, t)


def subdiffusive_prefactor(dist: WaitingTimeDist) -> float:
    """sin(pi alpha) / (pi c): Nbar(t) ~ prefactor t^alpha."""
    a = dist.alpha
    return math.sin(math.pi * a) / (math.pi * dist.tail_constant_c)


def var_p_subdiffusive(t: Times, params: TheoryParams):
    """(D* t*/t_c) sin(pi alpha)/(pi c) t^alpha for alpha < 1."""
    dist = params.dist
    if dist.kind != WaitingKind.YULE_SIMON or dist.alpha >= 1:
        raise DomainError("subdiffusive law needs a Yule-Simon law with alpha < 1")
    tt = _as_times(t)
    amp = params.D_star * params.t_star / params.t_c * subdiffusive_prefactor(dist)
    return _scalar_or_array(amp * tt ** dist.alpha, t)


def ipr_prediction(var_p: float, hbar: float, profile: Profile) -> float:
    """Quasiclassical IPR: hbar/sqrt(pi var p) or hbar/sqrt(2 var p)."""
    if not var_p > 0:
        raise DomainError(f"var_p must be positive, got {var_p}")
    if profile == Profile.GAUSSIAN:
        return hbar / math.sqrt(math.pi * var_p)
    return hbar / math.sqrt(2.0 * var_p)


def _ipr_term(var_p: NDArray[np.float64], hbar: float, profile: Profile) -> NDArray[np.float64]:
    out = np.ones_like(var_p)
    pos = var_p > 0
    out[pos] = [min(1.0, ipr_prediction(v, hbar, profile)) for v in var_p[pos]]
    return out


def _prediction_inputs(params: TheoryParams, t: Times, tables: Optional[RenewalTables]):
    tt = _as_times(t)
    t_int = np.atleast_1d(np.rint(tt).astype(np.int64))
    T = max(int(t_int.max()), 1)
    if tables is None and params.kappa > 0:
        tables = RenewalTables.build(params, T)
    return tt, t_int, T, tables


def purity_prediction(params: TheoryParams, t: Times,
                      tables: Optional[RenewalTables] = None):
    """D(t, 0)^2 + IPR(t), clipped to 1."""
    tt, t_int, T, tables = _prediction_inputs(params, t, tables)
    var = var_p_prediction_series(params, T, tables)[t_int]
    D = _decoherence_from_origin(params, t_int, tables)
    values = np.minimum(D ** 2 + _ipr_term(var, params.hbar, params.profile), 1.0)
    return _scalar_or_array(values if np.ndim(t) else values[0], t)


def logfid_prediction(params: TheoryParams, t: Times,
                      tables: Optional[RenewalTables] = None):
    """-2 Nbar(t) / t_c."""
    tt, t_int, T, tables = _prediction_inputs(params, t, tables)
    if params.kappa == 0:
        values = np.zeros(t_int.size)
    else:
        tables.check(int(t_int.max()))
        values = -2.0 * tables.nbar[t_int] / params.t_c
    return _scalar_or_array(values if np.ndim(t) else values[0], t)


def _decoherence_from_origin(params: TheoryParams, t_int: NDArray[np.int64],
                             tables: Optional[RenewalTables]) -> NDArray[np.float64]:
    if params.kappa == 0:
        return np.ones(t_int.size)
    tables.check(int(t_int.max()))
    return np.clip(tables.M[t_int], 0.0, 1.0)


def purity_crossover(params: TheoryParams,
                     tables: Optional[RenewalTables] = None) -> float:
    """
    Onset of the purity background, where Nbar(t) reaches t_c ln t*.

    Stationary noise: tau_bar t_c ln t*. Levy noise: first kick in the tables
    reaching the threshold, else the inverted asymptote of Nbar.
    """
    if params.kappa == 0:
        return math.inf
    target = params.t_c * math.log(params.t_star)
    if params.dist.is_stationary:
        return params.dist.mean_waiting_time * target
    if tables is not None:
        reached = np.nonzero(tables.nbar >= target)[0]
        if reached.size:
            return float(reached[0])
    return (target / subdiffusive_prefactor(params.dist)) ** (1.0 / params.dist.alpha)


ML_CHECK_FACTOR = 10.0
ML_CHECK_TOL = 0.1


def ml_approx_gap(params: TheoryParams, t: Sequence[int],
                  tables: Optional[RenewalTables] = None) -> Optional[float]:
    """
    Largest relative gap between decoherence_ml_approx and the exact D(t, 0).

    Only times t >= 10 t_c^(1/alpha) of a Levy process (0 < alpha < 1) are
    compared; returns None when none qualify. A gap above 10% is logged as a
    warning and never raised.
    """
    dist = params.dist
    if params.kappa == 0 or dist.kind != WaitingKind.YULE_SIMON or not dist.alpha < 1:
        return None
    t_int = np.asarray(sorted(set(int(x) for x in t)), dtype=np.int64)
    start = ML_CHECK_FACTOR * params.t_c ** (1.0 / dist.alpha)
    t_int = t_int[t_int >= start]
    if t_int.size == 0:
        log.debug("no sampled time beyond {:.4g} for the Mittag-Leffler check", start)
        return None
    if tables is None:
        tables = RenewalTables.build(params, int(t_int[-1]))
    tables.check(int(t_int[-1]))
    exact = np.maximum(np.clip(tables.M[t_int], 0.0, 1.0), 1e-300)
    approx = np.array([decoherence_ml_approx(dist.alpha, params.t_c, float(tables.nbar[k]))
                       for k in t_int])
    gaps = np.abs(approx - exact) / exact
    worst = int(np.argmax(gaps))
    gap = float(gaps[worst])
    if gap > ML_CHECK_TOL:
        log.warning("Mittag-Leffler approximation off by {:.1%} at t={} (exact {:.4g}, approx {:.4g})",
                    gap, int(t_int[worst]), exact[worst], approx[worst])
    else:
        log.info("Mittag-Leffler approximation within {:.1%} of the exact D(t, 0) for t >= {:.4g}",
                 gap, start)
    return gap


def theory_series(params: TheoryParams, times: Sequence[int],
                  horizon: Optional[int] = None) -> TheorySeries:
    """Every prediction column at the given times, sharing one set of tables."""
    t_int = np.asarray(sorted(set(int(t) for t in times)), dtype=np.int64)
    if t_int.size == 0 or t_int[0] < 0:
        raise DomainError("times must be nonnegative and nonempty")
    T = max(int(t_int[-1]), 1)
    if horizon is not None and T > horizon:
        raise HorizonError(f"t={T} beyond horizon {horizon}")
    log.info("theory series: D*={:.4g} t*={:.4g} t_c={:.4g} ({}) T={}",
             params.D_star, params.t_star, params.t_c, params.dist.label, T)
    tables = RenewalTables.build(params, T) if params.kappa > 0 else None
    var = var_p_prediction_series(params, T, tables)[t_int]
    D = _decoherence_from_origin(params, t_int, tables)
    ipr = _ipr_term(var, params.hbar, params.profile)
    purity = np.minimum(D ** 2 + ipr, 1.0)
    if tables is None:
        logfid = np.zeros(t_int.size)
    else:
        logfid = -2.0 * tables.nbar[t_int] / params.t_c
    return TheorySeries(
        times=t_int,
        var_p_pred=var,
        decoherence_D=D,
        ipr_pred=ipr,
        purity_pred=purity,
        logfid_pred=logfid,
        ml_gap=ml_approx_gap(params, t_int, tables),
    )
