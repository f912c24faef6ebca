# harness/csv_io.py
"""
CSV writers and readers for every table the lab emits.

Tables are strict comma-separated with a header row; floats are rendered
with 12 significant digits.
"""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from physics.errors import DomainError
from physics.models import ObservableSeries, TheorySeries

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.12g"

SERIES_COLUMNS = ["t", "var_p", "ipr", "purity", "purity_se", "logfid", "logfid_se"]
SNAPSHOT_COLUMNS = ["p_over_pstar", "density"]
CLASSICAL_COLUMNS = ["t", "var_p_classical"]
THEORY_COLUMNS = ["t", "var_p_pred", "D", "ipr_pred", "purity_pred", "logfid_pred"]
RENEWAL_COLUMNS = ["t", "f", "nbar", "mgf"]
NOISELESS_COLUMNS = ["t", "var_p0"]
COMPARISON_COLUMNS = ["t", "quantity", "simulated", "predicted", "rel_error"]

SERIES_FILE = "series.csv"
CLASSICAL_FILE = "classical.csv"
THEORY_FILE = "theory.csv"
RENEWAL_FILE = "renewal.csv"
NOISELESS_FILE = "noiseless.csv"
COMPARISON_FILE = "comparison.csv"


def snapshot_name(t: int) -> str:
    return f"snapshot_t{int(t)}.csv"


def write_table(frame: pd.DataFrame, path: PathLike, columns: Sequence[str]) -> Path:
    """Write `frame` with exactly `columns`, in that order."""
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DomainError(f"table for {path} lacks columns {missing}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame[list(columns)].to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan")
    return path


def read_table(path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
    """Read a table and check its header."""
    frame = pd.read_csv(path, sep=",")
    if list(frame.columns) != list(columns):
        raise DomainError(f"{path}: expected columns {list(columns)}, got {list(frame.columns)}")
    return frame


def series_frame(obs: ObservableSeries) -> pd.DataFrame:
    return pd.DataFrame({
        "t": obs.times,
        "var_p": obs.var_p,
        "ipr": obs.ipr,
        "purity": obs.purity,
        "purity_se": obs.purity_se,
        "logfid": obs.log_fidelity,
        "logfid_se": obs.log_fidelity_se,
    })


def theory_frame(series: TheorySeries) -> pd.DataFrame:
    return pd.DataFrame({
        "t": series.times,
        "var_p_pred": series.var_p_pred,
        "D": series.decoherence_D,
        "ipr_pred": series.ipr_pred,
        "purity_pred": series.purity_pred,
        "logfid_pred": series.logfid_pred,
    })


def kick_frame(values: np.ndarray, column: str) -> pd.DataFrame:
    """One value per kick t = 0..len-1."""
    return pd.DataFrame({"t": np.arange(len(values)), column: values})


def snapshot_frame(centers: np.ndarray, density: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({"p_over_pstar": centers, "density": density})


def write_series(obs: ObservableSeries, out_dir: PathLike) -> Path:
    return write_table(series_frame(obs), Path(out_dir) / SERIES_FILE, SERIES_COLUMNS)


def write_theory(series: TheorySeries, out_dir: PathLike) -> Path:
    return write_table(theory_frame(series), Path(out_dir) / THEORY_FILE, THEORY_COLUMNS)


def write_classical(var_p: np.ndarray, out_dir: PathLike) -> Path:
    return write_table(kick_frame(var_p, "var_p_classical"), Path(out_dir) / CLASSICAL_FILE,
                       CLASSICAL_COLUMNS)


def write_noiseless(var_p0: np.ndarray, out_dir: PathLike) -> Path:
    return write_table(kick_frame(var_p0, "var_p0"), Path(out_dir) / NOISELESS_FILE,
                       NOISELESS_COLUMNS)


def write_renewal(f: np.ndarray, nbar: np.ndarray, mgf: np.ndarray, out_dir: PathLike) -> Path:
    frame = pd.DataFrame({"t": np.arange(len(f)), "f": f, "nbar": nbar, "mgf": mgf})
    return write_table(frame, Path(out_dir) / RENEWAL_FILE, RENEWAL_COLUMNS)


def write_snapshots(snapshots: Dict[int, tuple], out_dir: PathLike) -> List[Path]:
    """snapshots maps t -> (centers in p*, density)."""
    return [
        write_table(snapshot_frame(*snapshots[t]), Path(out_dir) / snapshot_name(t), SNAPSHOT_COLUMNS)
        for t in sorted(snapshots)
    ]
