# utils/config.py

import os
from pathlib import Path

from pydantic import BaseModel
from dotenv import load_dotenv

_ENV_LOADED = False


def _ensure_env_loaded() -> None:
    global _ENV_LOADED
    if _ENV_LOADED:
        return
    env_path = Path(__file__).resolve().parent.parent / ".env"
    load_dotenv(env_path, override=False)
    _ENV_LOADED = True


def _get_bool(name: str, default: bool) -> bool:
    v = os.getenv(name)
    if v is None:
        return default
    v = v.strip().strip('"').strip("'").lower()
    return v in ("1", "true", "yes", "on")


def _get_int(name: str, default: int) -> int:
    v = os.getenv(name)
    if v is None or not v.strip():
        return default
    return int(v.strip())


def _get_float(name: str, default: float) -> float:
    v = os.getenv(name)
    if v is None or not v.strip():
        return default
    return float(v.strip())


class Settings(BaseModel):
    log_level: str
    log_dir: str
    log_json: bool

    output_dir: str
    cache_dir: str
    workers: int

    mlf_series_terms: int
    mlf_switch: float
    mlf_tol: float

    yule_simon_table: int


def load_settings() -> Settings:
    _ensure_env_loaded()
    return Settings(
        log_level=os.getenv("LOG_LEVEL", "INFO"),
        log_dir=os.getenv("LOG_DIR", "logs"),
        log_json=_get_bool("LOG_JSON", False),
        output_dir=os.getenv("LAB_OUTPUT_DIR", "runs"),
        cache_dir=os.getenv("LAB_CACHE_DIR", ".cache/levykick"),
        workers=max(1, _get_int("LAB_WORKERS", 1)),
        mlf_series_terms=_get_int("MLF_SERIES_TERMS", 200),
        mlf_switch=_get_float("MLF_SWITCH", 5.0),
        mlf_tol=_get_float("MLF_TOL", 1e-10),
        yule_simon_table=_get_int("YULE_SIMON_TABLE", 1_000_000),
    )
