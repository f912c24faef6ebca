# evaluation/__init__.py
"""
Evaluation module for tracking pipeline stage metrics.

Provides:
- StageMetrics: Dataclass for individual stage metrics
- track_stage: Decorator for automatic wall-time capture
- Session functions: get_session_metrics, clear_session_metrics, total_wall_seconds
"""
from evaluation.metrics import (
    StageMetrics,
    track_stage,
    get_session_metrics,
    clear_session_metrics,
    add_metrics,
    total_wall_seconds,
)

__all__ = [
    "StageMetrics",
    "track_stage",
    "get_session_metrics",
    "clear_session_metrics",
    "add_metrics",
    "total_wall_seconds",
]
