# evaluation/metrics.py
"""
Metrics collection for experiment stages.

Tracks wall time and success/failure for each pipeline stage
(noiseless reference, quantum ensemble, classical baseline, theory).
"""
from __future__ import annotations

import functools
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional


@dataclass
class StageMetrics:
    """Metrics for a single pipeline stage."""
    stage: str
    wall_ms: float = 0.0
    success: bool = True
    error: Optional[str] = None
    timestamp: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "wall_ms": round(self.wall_ms, 3),
            "success": self.success,
            "error": self.error,
            "timestamp": self.timestamp.isoformat(),
        }


# Session-level metrics storage
_session_metrics: List[StageMetrics] = []


def get_session_metrics() -> List[StageMetrics]:
    """Get all metrics collected in this session."""
    return _session_metrics.copy()


def clear_session_metrics() -> None:
    """Clear session metrics."""
    global _session_metrics
    _session_metrics = []


def add_metrics(metrics: StageMetrics) -> None:
    """Add metrics to the session."""
    _session_metrics.append(metrics)


def track_stage(stage: str):
    """
    Decorator to track wall time of a pipeline stage.

    Usage:
        @track_stage("quantum")
        def run_quantum(cfg):
            ...
    """
    def decorator(func: Callable):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            error = None
            success = True
            try:
                return func(*args, **kwargs)
            except Exception as e:
                error = f"{type(e).__name__}: {e}"
                success = False
                raise
            finally:
                add_metrics(StageMetrics(
                    stage=stage,
                    wall_ms=(time.perf_counter() - start_time) * 1000,
                    success=success,
                    error=error,
                ))
        return wrapper
    return decorator


def total_wall_seconds(metrics: Optional[List[StageMetrics]] = None) -> float:
    """Sum of stage wall times in seconds."""
    metrics = get_session_metrics() if metrics is None else metrics
    return sum(m.wall_ms for m in metrics) / 1000.0
