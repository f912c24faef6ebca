# physics/specfun.py
"""
Special functions for the renewal and theory layers.

- log_gamma: ln Gamma(x) for x > 0
- mittag_leffler: E_alpha(x) on the negative real axis, 0 < alpha <= 1
- hyp2f1_11: 2F1(1, 1; alpha + 2; x) on [0, 1)

E_alpha is evaluated by whichever of three branches first meets the policy
tolerance: the Taylor series (preferred for |x| <= switch), the algebraic
asymptotic expansion (preferred beyond), and the integral representation

    E_alpha(-y) = sin(alpha pi)/(alpha pi) * int_0^inf exp(-(u y)^(1/alpha))
                  / (u^2 + 2 u cos(alpha pi) + 1) du,

which has a positive smooth integrand and is used when cancellation in the
series or truncation of the asymptotic series would exceed the tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate
from scipy.special import gammaln, rgamma

from physics.errors import ConvergenceError, DomainError
from utils.logging import get_logger

log = get_logger("specfun")

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MlfEvalPolicy:
    """Evaluation parameters of the Mittag-Leffler function."""
    series_cutoff_terms: int = 200
    series_asymptotic_switch: float = 5.0
    target_abs_tol: float = 1e-10

    def __post_init__(self):
        if self.series_cutoff_terms < 50:
            raise DomainError("series_cutoff_terms must be >= 50")
        if not self.series_asymptotic_switch > 0:
            raise DomainError("series_asymptotic_switch must be positive")
        if not 0 < self.target_abs_tol <= 1e-8:
            raise DomainError("target_abs_tol must lie in (0, 1e-8]")

    @classmethod
    def from_settings(cls) -> "MlfEvalPolicy":
        from utils.config import load_settings
        s = load_settings()
        return cls(
            series_cutoff_terms=s.mlf_series_terms,
            series_asymptotic_switch=s.mlf_switch,
            target_abs_tol=s.mlf_tol,
        )


DEFAULT_POLICY = MlfEvalPolicy()


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return float(gammaln(x))


def mlf_series(alpha: float, y: float, terms: int) -> Tuple[float, float]:
    """Taylor series of E_alpha(-y); returns (value, error estimate)."""
    n = np.arange(terms, dtype=float)
    with np.errstate(divide="ignore"):
        log_mag = n * math.log(y) - gammaln(alpha * n + 1.0)
    if log_mag.max() > 700.0:
        return math.nan, math.inf
    mag = np.exp(log_mag)
    signed = np.where(n % 2 == 0, mag, -mag)
    value = math.fsum(signed.tolist())
    # rounding of the largest term plus the first neglected term
    tail = math.exp(terms * math.log(y) - gammaln(alpha * terms + 1.0))
    if mag[-1] > mag[-2]:
        tail = math.inf
    return value, 4.0 * _EPS * float(mag.max()) + tail


def mlf_asymptotic(alpha: float, y: float, max_terms: int = 400) -> Tuple[float, float]:
    """
    Algebraic expansion E_alpha(-y) ~ sum_k (-1)^(k+1) y^(-k) / Gamma(1 - alpha k),
    truncated at its smallest term.
    """
    value = 0.0
    prev = math.inf
    err = math.inf
    for k in range(1, max_terms + 1):
        term = (-1.0) ** (k + 1) * y ** (-k) * float(rgamma(1.0 - alpha * k))
        mag = abs(term)
        if mag == 0.0:
            # pole of Gamma(1 - alpha k): term vanishes, keep going
            continue
        if mag > prev:
            err = prev
            break
        value += term
        prev = mag
        if mag < _EPS * abs(value):
            err = mag
            break
    if alpha > 2.0 / 3.0:
        # exponentially small contribution not captured by the algebraic terms
        err += math.exp(y ** (1.0 / alpha) * math.cos(math.pi / alpha)) / alpha
    return value, err


def mlf_integral(alpha: float, y: float, tol: float) -> Tuple[float, float]:
    """Integral representation of E_alpha(-y), 0 < alpha < 1."""
    c = math.cos(alpha * math.pi)
    pref = math.sin(alpha * math.pi) / (alpha * math.pi)
    inv_alpha = 1.0 / alpha

    def integrand(u: float) -> float:
        return math.exp(-(u * y) ** inv_alpha) / (u * u + 2.0 * u * c + 1.0)

    breaks = sorted({b for b in (1.0 / y, -c, 1.0, 2.0 - c) if b > 0})
    value, err = 0.0, 0.0
    lo = 0.0
    for hi in breaks:
        if hi <= lo:
            continue
        v, e = integrate.quad(integrand, lo, hi, epsabs=tol / 10, epsrel=1e-13, limit=400)
        value += v
        err += e
        lo = hi
    v, e = integrate.quad(integrand, lo, np.inf, epsabs=tol / 10, epsrel=1e-13, limit=400)
    value += v
    err += e
    return pref * value, pref * err


def mittag_leffler(alpha: float, x: float, policy: MlfEvalPolicy = DEFAULT_POLICY) -> float:
    """
    E_alpha(x) = sum_n x^n / Gamma(alpha n + 1) for 0 < alpha <= 1 and x <= 0.

    The result lies in (0, 1] and is nonincreasing in |x|.
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"mittag_leffler requires 0 < alpha <= 1, got {alpha}")
    if not x <= 0:
        raise DomainError(f"mittag_leffler requires x <= 0, got {x}")
    if x == 0:
        return 1.0
    if alpha == 1.0:
        return math.exp(x)

    y = -x
    tol = policy.target_abs_tol
    series: Callable[[], Tuple[float, float]] = lambda: mlf_series(alpha, y, policy.series_cutoff_terms)
    asymptotic: Callable[[], Tuple[float, float]] = lambda: mlf_asymptotic(alpha, y)
    if y <= policy.series_asymptotic_switch:
        order = (("series", series), ("asymptotic", asymptotic))
    else:
        order = (("asymptotic", asymptotic), ("series", series))

    for name, branch in order:
        value, err = branch()
        if err <= tol and 0.0 < value <= 1.0 + tol:
            log.debug("E_{}({}) via {} (err {:.2e})", alpha, x, name, err)
            return min(value, 1.0)

    value, err = mlf_integral(alpha, y, tol)
    if not err <= tol or not math.isfinite(value):
        raise ConvergenceError(
            f"E_{alpha}({x}) did not converge: integral error {err:.3e} > {tol:.1e}"
        )
    log.debug("E_{}({}) via integral (err {:.2e})", alpha, x, err)
    return min(value, 1.0)


def mittag_leffler_array(
    alpha: float, x: ArrayLike, policy: MlfEvalPolicy = DEFAULT_POLICY
) -> NDArray[np.float64]:
    """Elementwise mittag_leffler over an array of nonpositive arguments."""
    xs = np.asarray(x, dtype=float)
    out = np.empty_like(xs)
    flat = out.reshape(-1)
    for i, xi in enumerate(xs.reshape(-1)):
        flat[i] = mittag_leffler(alpha, float(xi), policy)
    return out


def hyp2f1_11(alpha: float, x: float, tol: float = 1e-12,
              chunk: int = 1_000_000, max_terms: Optional[int] = None) -> float:
    """
    2F1(1, 1; alpha + 2; x) by direct summation.

    Term ratio x (n + 1) / (n + alpha + 2) < x, so the tail after a term t is
    bounded by t x / (1 - x); summation stops once that bound is below tol.
    """
    if not alpha > 0:
        raise DomainError(f"hyp2f1_11 requires alpha > 0, got {alpha}")
    if not 0 <= x < 1:
        raise DomainError(f"hyp2f1_11 requires 0 <= x < 1, got {x}")
    if x == 0:
        return 1.0

    if max_terms is None:
        # x^n must fall below tol (1 - x); generous bound on the needed count
        max_terms = int(min(5e8, 50 + 2.0 * math.log(tol * (1 - x)) / math.log(x)))
    chunk = max(2, min(chunk, max_terms))
    total = 0.0
    carry = 1.0
    start = 0
    bound = x / (1.0 - x)
    while start < max_terms:
        n = np.arange(start, start + chunk, dtype=float)
        ratios = x * (n + 1.0) / (n + alpha + 2.0)
        terms = carry * np.concatenate(([1.0], np.cumprod(ratios[:-1])))
        below = np.nonzero(terms * bound <= tol)[0]
        if below.size:
            total += float(np.sum(terms[: below[0] + 1]))
            return total
        total += float(np.sum(terms))
        carry = float(terms[-1] * ratios[-1])
        start += chunk
    raise ConvergenceError(f"hyp2f1_11({alpha}, {x}) needs more than {max_terms} terms")
