# harness/compare.py
"""Simulation vs theory comparison tables."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike

from harness.csv_io import (
    COMPARISON_COLUMNS,
    COMPARISON_FILE,
    SERIES_COLUMNS,
    SERIES_FILE,
    THEORY_COLUMNS,
    THEORY_FILE,
    read_table,
    write_table,
)
from utils.logging import get_logger

log = get_logger("harness")

REL_EPS = 1e-30

# (simulated column, predicted column, quantity label)
QUANTITIES: Tuple[Tuple[str, str, str], ...] = (
    ("var_p", "var_p_pred", "var_p"),
    ("ipr", "ipr_pred", "ipr"),
    ("purity", "purity_pred", "purity"),
    ("logfid", "logfid_pred", "logfid"),
)


def symmetric_relative_error(a: ArrayLike, b: ArrayLike, eps: float = REL_EPS):
    """|a - b| / max(|a|, |b|, eps)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), eps)
    return float(out) if out.ndim == 0 else out


def compare_frames(
    sim: pd.DataFrame,
    theory: pd.DataFrame,
    quantities: Sequence[Tuple[str, str, str]] = QUANTITIES,
) -> pd.DataFrame:
    """Long-format table over the sample times present in both inputs."""
    merged = sim.merge(theory, on="t", how="inner").sort_values("t")
    parts = []
    for sim_col, pred_col, label in quantities:
        parts.append(pd.DataFrame({
            "t": merged["t"].to_numpy(),
            "quantity": label,
            "simulated": merged[sim_col].to_numpy(),
            "predicted": merged[pred_col].to_numpy(),
            "rel_error": symmetric_relative_error(merged[sim_col], merged[pred_col]),
        }))
    if not parts or merged.empty:
        return pd.DataFrame(columns=COMPARISON_COLUMNS)
    return pd.concat(parts, ignore_index=True)[COMPARISON_COLUMNS]


def compare_dirs(sim_dir: Union[str, Path], theory_dir: Union[str, Path],
                 out_dir: Union[str, Path, None] = None) -> pd.DataFrame:
    """Read series.csv and theory.csv, write comparison.csv to out_dir."""
    sim = read_table(Path(sim_dir) / SERIES_FILE, SERIES_COLUMNS)
    theory = read_table(Path(theory_dir) / THEORY_FILE, THEORY_COLUMNS)
    table = compare_frames(sim, theory)
    target = Path(sim_dir if out_dir is None else out_dir) / COMPARISON_FILE
    write_table(table, target, COMPARISON_COLUMNS)
    log.info("comparison of {} rows written to {}", len(table), target)
    return table
