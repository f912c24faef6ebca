# utils/logging.py
"""
Loguru-based structured logging for the rotator lab.

Features:
- Colored console output tagged with the emitting component
- Optional JSON file logging (rotated daily)
- Component filtering for focused debugging
"""
from __future__ import annotations

import os
import sys
from typing import Optional

from loguru import logger


# Log format for console
CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{extra[component]}</cyan> | "
    "<level>{message}</level>"
)

# Log format for JSON file
JSON_FORMAT = "{message}"

# Records emitted before setup_logging() still need the key
logger.configure(extra={"component": "lab"})


def setup_logging(
    level: str = "INFO",
    log_dir: str = "logs",
    console: bool = True,
    json_file: bool = False,
    component_filter: Optional[str] = None
) -> None:
    """
    Setup Loguru logging.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR)
        log_dir: Directory for log files
        console: Enable console output
        json_file: Enable JSON file logging
        component_filter: Only show console logs from one component
    """
    logger.remove()

    if console:
        logger.add(
            sys.stderr,
            format=CONSOLE_FORMAT,
            level=level,
            colorize=True,
            filter=lambda record: (
                component_filter is None or
                record["extra"].get("component", "") == component_filter
            )
        )

    if json_file:
        os.makedirs(log_dir, exist_ok=True)
        logger.add(
            f"{log_dir}/levykick_{{time:YYYY-MM-DD}}.json",
            format=JSON_FORMAT,
            level=level,
            rotation="00:00",
            retention="7 days",
            serialize=True
        )


def get_logger(component: str = "lab"):
    """
    Get a logger bound to a specific component.

    Usage:
        log = get_logger("renewal")
        log.info("sprinkling recursion T={}", 1000)
    """
    return logger.bind(component=component)
