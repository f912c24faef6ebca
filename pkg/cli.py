# cli.py
"""
Command-line entry point (`levykick`).

Commands:
- localize: noiseless run and D* fit
- simulate: quantum ensemble and classical baseline
- theory: analytic predictions for the same flags
- run: every stage plus the comparison table
- renewal: sprinkling / mean count / MGF table
- mlf: one Mittag-Leffler evaluation
- compare: comparison table from a simulation and a theory directory

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 partial results.
"""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence

import click
from pydantic import ValidationError

from harness import csv_io
from harness.compare import compare_dirs
from harness.experiment import ExperimentConfig, load_config, reference_trace, run_experiment
from harness.fitting import fit_break_time
from physics.errors import ConvergenceError, DomainError, HorizonError, PartialResultsError
from physics.models import RotatorConfig, WaitingTimeDist
from physics.renewal import renewal_series
from physics.specfun import MlfEvalPolicy, mittag_leffler
from utils.cache import FileCache
from utils.config import load_settings
from utils.logging import get_logger, setup_logging

log = get_logger("cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_PARTIAL = 3


def _int_list(ctx, param, value: Optional[str]):
    if value is None or value == "log64":
        return value
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated integers or 'log64'") from None


def _float_pair(ctx, param, value: Optional[str]):
    if value is None:
        return None
    try:
        pair = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected 'lo,hi'") from None
    if len(pair) != 2:
        raise click.BadParameter("expected 'lo,hi'")
    return pair


def experiment_options(func: Callable) -> Callable:
    """Flags shared by simulate, theory and run."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="key = value config file; flags override it"),
        click.option("--preset", type=click.Choice(["full", "fast"]), help="(M, N) preset"),
        click.option("--M", "M", type=int, help="explicit M (with --N)"),
        click.option("--N", "N", type=int, help="explicit N (with --M)"),
        click.option("--K", "K", type=float, help="kick strength"),
        click.option("--alpha", type=float, help="Yule-Simon exponent; omit for every-kick noise"),
        click.option("--W", "W", type=float, help="detuning half-width"),
        click.option("--kappa", type=float, help="detuning variance W^2/3"),
        click.option("--realizations", type=int, help="ensemble size R"),
        click.option("--tmax", "t_max", type=int, help="number of kicks"),
        click.option("--sample-times", callback=_int_list, help="'log64' or comma-separated kicks"),
        click.option("--snapshot-times", callback=_int_list, help="comma-separated snapshot kicks"),
        click.option("--seed", "master_seed", type=int, help="master seed"),
        click.option("--out", "output_dir", type=click.Path(file_okay=False), help="output directory"),
        click.option("--workers", type=int, help="worker threads"),
        click.option("--dstar", type=float, help="use this D* instead of fitting"),
        click.option("--fit-window", callback=_float_pair,
                     help="'lo,hi' kicks for the var p exponent fit (default: last decade)"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config_from_flags(config_path: Optional[str], require_noise: bool, **flags: Any) -> ExperimentConfig:
    if require_noise and config_path is None and (flags.get("W") is None) == (flags.get("kappa") is None):
        raise click.UsageError("give exactly one of --W and --kappa")
    cfg = load_config(config_path, **flags)
    if require_noise and cfg.W is None and cfg.kappa is None:
        raise click.UsageError("the config gives neither W nor kappa")
    return cfg


@click.group()
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
@click.option("--log-json/--no-log-json", default=None, help="also write JSON logs")
def lab(log_level: Optional[str], log_json: Optional[bool]):
    """Levy-noise kicked rotator laboratory."""
    settings = load_settings()
    setup_logging(
        level=(log_level or settings.log_level).upper(),
        log_dir=settings.log_dir,
        json_file=settings.log_json if log_json is None else log_json,
    )


@lab.command()
@click.option("--preset", type=click.Choice(["full", "fast"]), default="full", show_default=True)
@click.option("--K", "K", type=float, default=7.5, show_default=True)
@click.option("--tmax", "t_max", type=int, default=5000, show_default=True)
@click.option("--levels", default="0", help="comma-separated initial levels to average over")
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None)
def localize(preset: str, K: float, t_max: int, levels: str, output_dir: Optional[str]):
    """Noiseless run and break-time fit of D*."""
    settings = load_settings()
    rot = RotatorConfig.preset(preset, K=K)
    initial = [int(v) for v in levels.split(",") if v.strip()]
    out = Path(output_dir or Path(settings.output_dir) / f"localize_{preset}")
    trace = reference_trace(rot, t_max, initial, FileCache(settings.cache_dir))
    csv_io.write_noiseless(trace, out)
    fit = fit_break_time(trace, rot.hbar)
    click.echo(f"D* = {fit.value:.6g} +- {fit.stderr:.2g}  t* = {fit.extra['t_star']:.6g}  "
               f"residual = {fit.residual:.3g}")


@lab.command()
@experiment_options
def simulate(config_path: Optional[str], **flags: Any):
    """Quantum ensemble run plus the classical baseline."""
    cfg = _config_from_flags(config_path, True, **flags)
    report = run_experiment(cfg, stages=("quantum", "classical"))
    click.echo(f"wrote {report.output_dir}")


@lab.command()
@experiment_options
def theory(config_path: Optional[str], **flags: Any):
    """Analytic predictions at the sample times."""
    cfg = _config_from_flags(config_path, True, **flags)
    report = run_experiment(cfg, stages=("theory",))
    click.echo(f"wrote {report.output_dir}")


@lab.command()
@experiment_options
def run(config_path: Optional[str], **flags: Any):
    """All stages and the comparison table."""
    cfg = _config_from_flags(config_path, True, **flags)
    report = run_experiment(cfg)
    click.echo(f"wrote {report.output_dir} (payload {report.manifest['payload_sha256'][:12]})")


@lab.command()
@click.option("--alpha", type=float, default=None, help="Yule-Simon exponent; omit for unit waits")
@click.option("--tmax", "t_max", type=int, default=1000, show_default=True)
@click.option("--z", type=float, default=-0.05, show_default=True, help="MGF argument")
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None)
def renewal(alpha: Optional[float], t_max: int, z: float, output_dir: Optional[str]):
    """Renewal statistics table t,f,nbar,mgf."""
    dist = WaitingTimeDist.from_alpha(alpha)
    series = renewal_series(dist, t_max, [z])
    out = Path(output_dir or Path(load_settings().output_dir) / "renewal")
    path = csv_io.write_renewal(series.sprinkling_f, series.mean_count_Nbar, series.mgf_values[z], out)
    click.echo(f"wrote {path}")


@lab.command()
@click.option("--alpha", type=float, required=True)
@click.option("--x", type=float, required=True)
def mlf(alpha: float, x: float):
    """Print E_alpha(x)."""
    click.echo(repr(mittag_leffler(alpha, x, MlfEvalPolicy.from_settings())))


@lab.command()
@click.option("--sim", "sim_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--theory", "theory_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None)
def compare(sim_dir: str, theory_dir: str, output_dir: Optional[str]):
    """Comparison table of a simulation against predictions."""
    table = compare_dirs(sim_dir, theory_dir, output_dir)
    click.echo(f"{len(table)} rows")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes."""
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    try:
        rv = lab.main(args=args, prog_name="levykick", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except (ValidationError, DomainError, HorizonError) as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_USAGE
    except ConvergenceError as e:
        click.echo(f"numerical failure: {e}", err=True)
        return EXIT_NUMERICAL
    except PartialResultsError as e:
        click.echo(f"partial results: {e}", err=True)
        return EXIT_PARTIAL
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
