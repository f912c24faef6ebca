# harness/experiment.py
"""
Experiment configuration and the end-to-end run.

ExperimentConfig is built from a `key = value` file (UTF-8, `#` comments)
and/or CLI flags; flags override file values. run_experiment executes the
requested stages, writes every CSV plus manifest.json, and raises
PartialResultsError after writing whatever succeeded when a stage fails.

Stages:
- noiseless: reference var p0 trace (cached) and the D* fit
- quantum: ensemble_run -> series.csv and snapshot files (abscissa in p*,
  so snapshots need D* from --dstar or the noiseless fit)
- classical: standard-map baseline -> classical.csv
- theory: predictions at the sample times -> theory.csv
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from evaluation.metrics import clear_session_metrics, get_session_metrics, track_stage
from harness import csv_io
from harness.compare import compare_frames
from harness.fitting import FitResult, fit_break_time, fit_power_law, fit_profile
from harness.manifest import build_manifest, write_manifest
from physics.classical import classical_var_series
from physics.errors import DomainError, FitError, LabError, PartialResultsError
from physics.models import NoiseParams, ObservableSeries, RotatorConfig, TheoryParams, WaitingTimeDist
from physics.quantum import ensemble_run, mean_momentum_within, noiseless_reference, rebin_probabilities
from physics.theory import theory_series
from utils.cache import FileCache, make_key
from utils.config import load_settings
from utils.logging import get_logger

log = get_logger("harness")

LOG_SAMPLE_COUNT = 64
ALL_STAGES = ("noiseless", "quantum", "classical", "theory")

# keys whose file values are integer lists
_LIST_KEYS = {"sample_times", "snapshot_times", "initial_levels"}
_FLOAT_LIST_KEYS = {"fit_window"}
_NONE_WORDS = {"", "none", "null"}


def log_spaced_times(t_max: int, count: int = LOG_SAMPLE_COUNT) -> List[int]:
    """`count` log-spaced integers from 1 to t_max, deduplicated."""
    if t_max < 1:
        raise DomainError(f"t_max must be >= 1, got {t_max}")
    raw = np.rint(np.logspace(0.0, math.log10(t_max), count)).astype(np.int64)
    return sorted(set(int(t) for t in raw))


class ExperimentConfig(BaseModel):
    """Validated parameters of one run."""
    model_config = ConfigDict(extra="forbid")

    preset: Optional[Literal["full", "fast"]] = "fast"
    M: Optional[int] = None
    N: Optional[int] = None
    K: float = 7.5
    alpha: Optional[float] = None
    W: Optional[float] = None
    kappa: Optional[float] = None
    realizations: int = 100
    t_max: int = 2000
    sample_times: Union[Literal["log64"], List[int]] = "log64"
    snapshot_times: List[int] = Field(default_factory=list)
    master_seed: int = 20060101
    output_dir: str = "runs/default"
    workers: int = 1
    classical_particles: int = 10_000
    reference_t_max: int = 5000
    initial_levels: List[int] = Field(default_factory=lambda: [0])
    dstar: Optional[float] = None
    rebin_width: int = 24
    fit_window: Optional[List[float]] = None

    @field_validator("realizations")
    @classmethod
    def _enough_realizations(cls, v: int) -> int:
        if v < 2:
            raise ValueError("realizations must be >= 2 for purity and fidelity")
        return v

    @field_validator("t_max", "workers", "rebin_width", "reference_t_max")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("fit_window")
    @classmethod
    def _decade_window(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is None:
            return v
        if len(v) != 2 or not (v[0] > 0 and v[1] >= 10.0 * v[0]):
            raise ValueError("fit_window must be [lo, hi] with 0 < lo and hi >= 10 lo")
        return v

    @field_validator("master_seed")
    @classmethod
    def _seed_range(cls, v: int) -> int:
        if not 0 <= v < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        return v

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if (self.M is None) != (self.N is None):
            raise ValueError("M and N must be given together")
        if self.M is not None:
            self.preset = None
        elif self.preset is None:
            raise ValueError("either a preset or explicit M and N is required")
        if self.W is not None and self.kappa is not None:
            raise ValueError("give at most one of W and kappa")
        if (self.W is not None and self.W < 0) or (self.kappa is not None and self.kappa < 0):
            raise ValueError("noise strength must be nonnegative")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        bad = [t for t in self.resolved_sample_times() if not 0 <= t <= self.t_max]
        bad += [t for t in self.snapshot_times if not 0 <= t <= self.t_max]
        if bad:
            raise ValueError(f"times {bad} outside [0, {self.t_max}]")
        if self.M is not None:
            RotatorConfig(K=self.K, M=self.M, N=self.N)
        return self

    def rotator(self) -> RotatorConfig:
        if self.M is not None:
            return RotatorConfig(K=self.K, M=self.M, N=self.N)
        return RotatorConfig.preset(self.preset, K=self.K)

    def dist(self) -> WaitingTimeDist:
        return WaitingTimeDist.from_alpha(self.alpha)

    def noise(self) -> NoiseParams:
        if self.kappa is not None:
            return NoiseParams.from_kappa(self.kappa, self.dist())
        return NoiseParams(W=self.W or 0.0, dist=self.dist())

    def resolved_sample_times(self) -> List[int]:
        if self.sample_times == "log64":
            return log_spaced_times(self.t_max)
        return sorted(set(int(t) for t in self.sample_times))

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def parse_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read `key = value` lines; `#` starts a comment."""
    values: Dict[str, Any] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise DomainError(f"{path}:{lineno}: empty key")
        values[key] = _parse_value(key, value)
    return values


def _parse_value(key: str, value: str) -> Any:
    if value.lower() in _NONE_WORDS:
        return None
    if key in _LIST_KEYS and value != "log64":
        return [int(v) for v in value.replace(" ", "").split(",") if v]
    if key in _FLOAT_LIST_KEYS:
        return [float(v) for v in value.replace(" ", "").split(",") if v]
    return value


def load_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> ExperimentConfig:
    """File values first, then overrides that are not None."""
    values: Dict[str, Any] = {}
    settings = load_settings()
    values["workers"] = settings.workers
    if path is not None:
        values.update(parse_config_file(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "output_dir" not in values:
        values["output_dir"] = str(Path(settings.output_dir) / "default")
    return ExperimentConfig(**values)


def reference_trace(rotator: RotatorConfig, t_max: int, initial_levels: Sequence[int],
                    cache: Optional[FileCache] = None) -> np.ndarray:
    """Noiseless var p0 on 0..t_max, reusing a cached trace when present."""
    key = make_key("noiseless", rotator.M, rotator.N, float(rotator.K), t_max, tuple(initial_levels))
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            log.info("noiseless trace from cache ({} kicks)", t_max)
            return np.asarray(hit, dtype=np.float64)
    trace = noiseless_reference(rotator, t_max, initial_levels)
    if cache is not None:
        cache.set(key, trace)
    return trace


@track_stage("noiseless")
def run_noiseless_stage(cfg: ExperimentConfig, out: Path, cache: Optional[FileCache],
                        written: List[Path]) -> Tuple[np.ndarray, FitResult]:
    rot = cfg.rotator()
    horizon = max(cfg.t_max, cfg.reference_t_max)
    trace = reference_trace(rot, horizon, cfg.initial_levels, cache)
    written.append(csv_io.write_noiseless(trace, out))
    fit = fit_break_time(trace, rot.hbar)
    return trace, fit


def snapshot_densities(obs: ObservableSeries, rot: RotatorConfig, width: int,
                       p_star: float) -> Dict[int, Tuple[np.ndarray, np.ndarray]]:
    """Re-binned snapshot densities with the abscissa in units of p*."""
    return {t: rebin_probabilities(probs, rot, width, p_star) for t, probs in obs.snapshots.items()}


@track_stage("quantum")
def run_quantum_stage(cfg: ExperimentConfig, out: Path, p_star: Optional[float],
                      written: List[Path]) -> ObservableSeries:
    rot = cfg.rotator()
    snaps = cfg.snapshot_times or [cfg.t_max]
    obs = ensemble_run(rot, cfg.noise(), cfg.realizations, cfg.t_max, cfg.resolved_sample_times(),
                       cfg.master_seed, workers=cfg.workers, snapshot_times=snaps)
    written.append(csv_io.write_series(obs, out))
    if p_star is None:
        log.warning("no D* available; snapshot files for t={} not written", sorted(obs.snapshots))
    else:
        written.extend(csv_io.write_snapshots(
            snapshot_densities(obs, rot, cfg.rebin_width, p_star), out))
    return obs


@track_stage("classical")
def run_classical_stage(cfg: ExperimentConfig, out: Path, written: List[Path]) -> np.ndarray:
    var = classical_var_series(cfg.rotator(), cfg.noise(), cfg.classical_particles, cfg.t_max,
                               cfg.master_seed)
    written.append(csv_io.write_classical(var, out))
    return var


@track_stage("theory")
def run_theory_stage(cfg: ExperimentConfig, out: Path, D_star: float, written: List[Path]):
    rot = cfg.rotator()
    params = TheoryParams(D_star=D_star, hbar=rot.hbar, kappa=cfg.noise().kappa, dist=cfg.dist())
    if params.kappa > 0:
        log.info("t*={:.4g} t_c={:.4g} tau_bar t_c/t*={:.4g}",
                 params.t_star, params.t_c, params.t_c_eff / params.t_star)
    series = theory_series(params, cfg.resolved_sample_times(), horizon=cfg.t_max)
    written.append(csv_io.write_theory(series, out))
    return series


def observable_fits(obs: ObservableSeries, rot: RotatorConfig, cfg: ExperimentConfig,
                    p_star: Optional[float]) -> Dict[str, Any]:
    """
    var p exponent over cfg.fit_window (last decade by default) and the
    profile class of every snapshot. A fit that cannot be made is logged
    and left out.
    """
    fits: Dict[str, Any] = {}
    t = np.arange(obs.kick_var_p.size, dtype=np.float64)
    try:
        fits["var_p_exponent"] = fit_power_law(t[1:], obs.kick_var_p[1:], cfg.fit_window).to_dict()
    except DomainError as e:
        log.warning("var p exponent not fitted: {}", e)
    if p_star is None:
        return fits
    profiles: Dict[str, Any] = {}
    for snap_t, (centers, density) in sorted(snapshot_densities(obs, rot, cfg.rebin_width, p_star).items()):
        try:
            profiles[str(snap_t)] = fit_profile(centers, density).to_dict()
        except FitError as e:
            log.warning("profile at t={} not classified: {}", snap_t, e)
    if profiles:
        fits["profiles"] = profiles
    return fits


@dataclass
class ExperimentReport:
    output_dir: Path
    manifest: Dict[str, Any]
    observables: Optional[ObservableSeries] = None
    theory: Any = None
    classical: Optional[np.ndarray] = None
    fit: Optional[FitResult] = None
    comparison: Optional[pd.DataFrame] = None
    errors: List[str] = field(default_factory=list)


def _guard(name: str, errors: List[str], fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except (LabError, ValueError, ArithmeticError, OSError) as e:
        msg = f"{name}: {type(e).__name__}: {e}"
        log.error("stage failed: {}", msg)
        errors.append(msg)
        return None


def run_experiment(
    cfg: ExperimentConfig,
    stages: Sequence[str] = ALL_STAGES,
    cache: Optional[FileCache] = None,
) -> ExperimentReport:
    """
    Run the requested stages and write outputs plus manifest.json.

    Quantum, classical and theory stages run concurrently once D* is known.
    D* is fitted from the noiseless trace when --dstar is absent and the
    theory or the snapshot files need it. Only files written by this call
    are hashed into the manifest.
    """
    unknown = set(stages) - set(ALL_STAGES)
    if unknown:
        raise DomainError(f"unknown stages {sorted(unknown)}")
    started = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cache is None:
        cache = FileCache(load_settings().cache_dir)
    clear_session_metrics()
    errors: List[str] = []
    written: List[Path] = []
    log.info("run -> {} (stages: {})", out, ", ".join(stages))

    fit: Optional[FitResult] = None
    D_star = cfg.dstar
    need_fit = "noiseless" in stages or (
        D_star is None and ("theory" in stages or "quantum" in stages))
    if need_fit:
        result = _guard("noiseless", errors, lambda: run_noiseless_stage(cfg, out, cache, written))
        if result is not None:
            fit = result[1]
            if D_star is None:
                D_star = fit.value
    rot = cfg.rotator()
    p_star = D_star / rot.hbar if D_star is not None else None

    tasks: Dict[str, Callable[[], Any]] = {}
    if "quantum" in stages:
        tasks["quantum"] = lambda: run_quantum_stage(cfg, out, p_star, written)
    if "classical" in stages:
        tasks["classical"] = lambda: run_classical_stage(cfg, out, written)
    if "theory" in stages:
        if D_star is None:
            errors.append("theory: no D* available (noiseless fit failed)")
        else:
            tasks["theory"] = lambda: run_theory_stage(cfg, out, D_star, written)

    results: Dict[str, Any] = {}
    if tasks:
        with ThreadPoolExecutor(max_workers=len(tasks)) as pool:
            futures = {name: pool.submit(_guard, name, errors, fn) for name, fn in tasks.items()}
            for name in tasks:
                results[name] = futures[name].result()
    errors.sort()

    obs: Optional[ObservableSeries] = results.get("quantum")
    theory = results.get("theory")
    comparison = None
    if obs is not None and theory is not None:
        comparison = compare_frames(csv_io.series_frame(obs), csv_io.theory_frame(theory))
        written.append(csv_io.write_table(comparison, out / csv_io.COMPARISON_FILE,
                                          csv_io.COMPARISON_COLUMNS))

    checks: Dict[str, bool] = {}
    if obs is not None:
        checks["var_p_nonnegative"] = bool(np.all(obs.var_p >= 0))
        checks["ipr_in_unit_interval"] = bool(np.all((obs.ipr > 0) & (obs.ipr <= 1 + 1e-12)))
        checks["mean_p_symmetric"] = mean_momentum_within(obs)
        if cfg.noise().W == 0:
            checks["noiseless_purity_is_one"] = bool(np.allclose(obs.purity, 1.0, atol=1e-9))
            checks["noiseless_logfid_is_zero"] = bool(np.allclose(obs.log_fidelity, 0.0, atol=1e-9))

    fits: Dict[str, Any] = {}
    if fit is not None:
        fits["break_time"] = fit.to_dict()
    if D_star is not None:
        fits["D_star_used"] = D_star
    if obs is not None:
        fits.update(observable_fits(obs, rot, cfg, p_star))
    if theory is not None and theory.ml_gap is not None:
        fits["ml_approx_gap"] = theory.ml_gap

    manifest = build_manifest(cfg.echo(), out, get_session_metrics(),
                              fits=fits, checks=checks, errors=errors, files=written,
                              wall_seconds=time.perf_counter() - started)
    write_manifest(manifest, out)
    report = ExperimentReport(out, manifest, obs, theory, results.get("classical"), fit,
                              comparison, errors)
    if errors:
        raise PartialResultsError(f"{len(errors)} stage(s) failed: {'; '.join(errors)}", errors)
    log.info("run complete in {:.2f} s", manifest["wall_seconds"])
    return report
