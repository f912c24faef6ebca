# harness/manifest.py
"""
Run manifest: config echo, seed, version, stage metrics and payload hashes.

The payload hash covers the CSVs a run wrote (name and bytes, in sorted
name order), so two runs with the same seed and worker count hash
identically even though their wall times differ. Files left in the
directory by an earlier run are not hashed. wall_seconds is the elapsed
time of the whole run when the caller measures it, otherwise the sum of
stage times.
"""
from __future__ import annotations

import hashlib
import platform
from datetime import datetime
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import orjson

from evaluation.metrics import StageMetrics, total_wall_seconds

PathLike = Union[str, Path]

MANIFEST_FILE = "manifest.json"
PACKAGE_NAME = "levykick"
FALLBACK_VERSION = "0.1.0"


def code_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return FALLBACK_VERSION


def file_sha256(path: PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def payload_hashes(out_dir: PathLike, files: Optional[Iterable[PathLike]] = None) -> Dict[str, str]:
    """Hash `files` (every CSV in out_dir when None), keyed by file name."""
    if files is None:
        paths = Path(out_dir).glob("*.csv")
    else:
        paths = (Path(out_dir) / Path(f).name for f in files)
    return {p.name: file_sha256(p) for p in sorted(paths)}


def payload_sha256(hashes: Dict[str, str]) -> str:
    h = hashlib.sha256()
    for name in sorted(hashes):
        h.update(name.encode("utf-8"))
        h.update(b"\0")
        h.update(hashes[name].encode("ascii"))
        h.update(b"\n")
    return h.hexdigest()


def build_manifest(
    config: Dict[str, Any],
    out_dir: PathLike,
    stages: Iterable[StageMetrics],
    *,
    fits: Optional[Dict[str, Any]] = None,
    checks: Optional[Dict[str, bool]] = None,
    errors: Optional[List[str]] = None,
    files: Optional[Iterable[PathLike]] = None,
    wall_seconds: Optional[float] = None,
) -> Dict[str, Any]:
    stages = list(stages)
    hashes = payload_hashes(out_dir, files)
    if wall_seconds is None:
        wall_seconds = total_wall_seconds(stages)
    return {
        "created": datetime.now().isoformat(timespec="seconds"),
        "version": code_version(),
        "python": platform.python_version(),
        "config": config,
        "master_seed": config.get("master_seed"),
        "stages": [m.to_dict() for m in stages],
        "wall_seconds": round(wall_seconds, 6),
        "fits": fits or {},
        "checks": checks or {},
        "files": hashes,
        "payload_sha256": payload_sha256(hashes),
        "partial": bool(errors),
        "errors": errors or [],
    }


def write_manifest(manifest: Dict[str, Any], out_dir: PathLike) -> Path:
    path = Path(out_dir) / MANIFEST_FILE
    path.write_bytes(orjson.dumps(
        manifest, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
    ))
    return path


def read_manifest(out_dir: PathLike) -> Dict[str, Any]:
    return orjson.loads((Path(out_dir) / MANIFEST_FILE).read_bytes())
