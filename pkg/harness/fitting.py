# harness/fitting.py
"""
Least-squares fits used by the harness.

- fit_break_time: one-parameter fit of var p0(t) = (D^2/hbar^2)(1 - exp(-t hbar^2/D))
- fit_power_law: log-log slope over a window of at least one decade
- fit_profile: Gaussian vs double-sided exponential momentum profile
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, stats

from physics.errors import DomainError, FitError
from physics.models import Profile
from utils.logging import get_logger

log = get_logger("harness")

# relative L2 residual above which the localization fit is rejected
BREAK_TIME_RESIDUAL = 0.3
# the saturation must be visible: t_max >= MIN_SPAN_BREAK_TIMES * t*
MIN_SPAN_BREAK_TIMES = 4.0

PROFILE_FLOOR = 1e-6


@dataclass
class FitResult:
    """Fitted parameter, its standard error, residual norm and fit window."""
    name: str
    value: float
    stderr: float
    residual: float
    window: Tuple[float, float]
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "stderr": self.stderr,
            "residual": self.residual,
            "window": list(self.window),
            **self.extra,
        }


def _localized_variance(t: NDArray[np.float64], D: float, hbar: float) -> NDArray[np.float64]:
    return -(D * D / hbar ** 2) * np.expm1(-t * hbar ** 2 / D)


def fit_break_time(
    var_p0_series: ArrayLike,
    hbar: float,
    times: Optional[ArrayLike] = None,
    residual_threshold: float = BREAK_TIME_RESIDUAL,
) -> FitResult:
    """
    Fit D* with t* = D*/hbar^2 tied.

    Raises FitError when the relative residual exceeds the threshold or when
    the data stop before 4 t* (saturation not resolved).
    """
    V = np.asarray(var_p0_series, dtype=np.float64)
    t = np.arange(V.size, dtype=np.float64) if times is None else np.asarray(times, dtype=np.float64)
    if t.shape != V.shape or V.size < 3:
        raise DomainError("break-time fit needs matching times and at least 3 points")
    if not np.all(np.isfinite(V)) or V.max() <= 0:
        raise FitError("variance series is not positive and finite")

    D0 = hbar * math.sqrt(V.max())
    try:
        popt, pcov = optimize.curve_fit(
            lambda tt, D: _localized_variance(tt, D, hbar),
            t, V, p0=[D0], bounds=(1e-12, np.inf),
            xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=10_000,
        )
    except (RuntimeError, ValueError) as e:
        raise FitError(f"break-time fit did not converge: {e}") from e

    D = float(popt[0])
    stderr = float(math.sqrt(max(pcov[0, 0], 0.0))) if np.isfinite(pcov[0, 0]) else math.inf
    resid = float(np.linalg.norm(V - _localized_variance(t, D, hbar)) / np.linalg.norm(V))
    t_star = D / hbar ** 2
    result = FitResult("D_star", D, stderr, resid, (float(t[0]), float(t[-1])),
                       {"t_star": t_star})
    log.info("break-time fit: D*={:.4g} +- {:.2g}, t*={:.4g}, residual {:.3g}",
             D, stderr, t_star, resid)
    if t[-1] < MIN_SPAN_BREAK_TIMES * t_star:
        raise FitError(
            f"series ends at t={t[-1]:g} < {MIN_SPAN_BREAK_TIMES:g} t* = {MIN_SPAN_BREAK_TIMES * t_star:.4g}; "
            "saturation not resolved"
        )
    if resid > residual_threshold:
        raise FitError(f"break-time fit residual {resid:.3g} above {residual_threshold:g}")
    return result


def last_decade(t: ArrayLike) -> Tuple[float, float]:
    """Default power-law window [t_max/10, t_max]."""
    t_max = float(np.max(np.asarray(t, dtype=np.float64)))
    return t_max / 10.0, t_max


def fit_power_law(
    t: ArrayLike,
    y: ArrayLike,
    window: Optional[Sequence[float]] = None,
) -> FitResult:
    """Slope of log y against log t over the window (default: last decade)."""
    tt = np.asarray(t, dtype=np.float64)
    yy = np.asarray(y, dtype=np.float64)
    if tt.shape != yy.shape:
        raise DomainError("t and y must have the same shape")
    lo, hi = last_decade(tt) if window is None else (float(window[0]), float(window[1]))
    if not (lo > 0 and hi >= lo * 10.0 * (1.0 - 1e-9)):
        raise DomainError(f"power-law window [{lo:g}, {hi:g}] spans less than one decade")
    sel = (tt >= lo * (1.0 - 1e-12)) & (tt <= hi * (1.0 + 1e-12))
    if sel.sum() < 3:
        raise DomainError(f"fewer than 3 points in window [{lo:g}, {hi:g}]")
    if np.any(yy[sel] <= 0):
        raise DomainError("power-law fit needs positive data")
    x, z = np.log(tt[sel]), np.log(yy[sel])
    reg = stats.linregress(x, z)
    resid = float(np.sqrt(np.mean((z - (reg.intercept + reg.slope * x)) ** 2)))
    log.debug("power-law fit on [{:g}, {:g}]: slope {:.4g} +- {:.2g}", lo, hi, reg.slope, reg.stderr)
    return FitResult("exponent", float(reg.slope), float(reg.stderr), resid, (lo, hi),
                     {"intercept": float(reg.intercept)})


def _log_gaussian(p: NDArray[np.float64], v: float) -> NDArray[np.float64]:
    return -0.5 * np.log(2.0 * math.pi * v) - p * p / (2.0 * v)


def _log_exponential(p: NDArray[np.float64], v: float) -> NDArray[np.float64]:
    # same variance v as the Gaussian: lambda = sqrt(2/v)
    lam = np.sqrt(2.0 / v)
    return np.log(0.5 * lam) - lam * np.abs(p)


def fit_profile(
    centers: ArrayLike,
    density: ArrayLike,
    floor: float = PROFILE_FLOOR,
    exclude_center: bool = True,
) -> FitResult:
    """
    Classify a symmetric density as Gaussian or double-sided exponential.

    Both models are fitted to the log-density with weights sqrt(density/peak)
    over bins above floor * peak; the bin nearest p = 0 is left out. The
    model with the smaller weighted residual wins. Both models are
    parametrized by the variance v, so `value` is v for either profile; the
    exponential also reports lambda = sqrt(2/v) in `extra`.
    """
    p = np.asarray(centers, dtype=np.float64)
    P = np.asarray(density, dtype=np.float64)
    if p.shape != P.shape or p.size < 3:
        raise FitError("degenerate histogram")
    peak = float(P.max())
    if not peak > 0:
        raise FitError("degenerate histogram: no positive density")
    sel = P > floor * peak
    if exclude_center:
        sel[int(np.argmin(np.abs(p)))] = False
    if sel.sum() < 3:
        raise FitError("degenerate histogram: fewer than 3 usable bins")

    widths = np.gradient(p) if p.size > 1 else np.ones(1)
    v0 = float(np.sum(p * p * P * np.abs(widths)) / max(np.sum(P * np.abs(widths)), 1e-300))
    v0 = v0 if v0 > 0 else float(np.var(p[sel]))
    x, lp = p[sel], np.log(P[sel])
    sigma = 1.0 / np.sqrt(P[sel] / peak)

    fits: Dict[Profile, Tuple[float, float, float]] = {}
    for profile, model, guess in (
        (Profile.GAUSSIAN, _log_gaussian, v0),
        (Profile.EXPONENTIAL, _log_exponential, v0),
    ):
        try:
            popt, pcov = optimize.curve_fit(model, x, lp, p0=[guess], sigma=sigma,
                                            bounds=(1e-300, np.inf), max_nfev=10_000)
        except (RuntimeError, ValueError) as e:
            log.debug("{} profile fit failed: {}", profile.value, e)
            continue
        w = 1.0 / sigma ** 2
        resid = float(np.sqrt(np.sum(w * (lp - model(x, popt[0])) ** 2) / np.sum(w)))
        err = float(math.sqrt(max(pcov[0, 0], 0.0))) if np.isfinite(pcov[0, 0]) else math.inf
        fits[profile] = (float(popt[0]), err, resid)

    if not fits:
        raise FitError("neither profile model could be fitted")
    best = min(fits, key=lambda k: fits[k][2])
    value, err, resid = fits[best]
    extra: Dict[str, Any] = {"profile": best.value}
    if best == Profile.EXPONENTIAL:
        extra["lambda"] = math.sqrt(2.0 / value)
    for profile, (_, _, r) in fits.items():
        extra[f"residual_{profile.value}"] = r
    log.info("profile fit: {} (residuals {})", best.value,
             ", ".join(f"{k.value}={r:.3g}" for k, (_, _, r) in fits.items()))
    return FitResult("variance", value, err, resid, (float(x.min()), float(x.max())), extra)
