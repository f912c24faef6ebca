# tests/conftest.py
"""Shared fixtures: slow-test gating and loguru capture."""
import os
import sys
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest
from loguru import logger


def pytest_collection_modifyitems(config, items):
    if os.getenv("LAB_RUN_SLOW", "").strip() in ("1", "true", "yes"):
        return
    skip = pytest.mark.skip(reason="long run; set LAB_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def log_messages():
    """Messages emitted through loguru while the test runs."""
    messages = []
    handler_id = logger.add(lambda m: messages.append(m.record), level="DEBUG")
    yield messages
    logger.remove(handler_id)


@pytest.fixture
def lab_env(tmp_path, monkeypatch):
    """Point output, cache and log directories at a temporary tree."""
    monkeypatch.setenv("LAB_OUTPUT_DIR", str(tmp_path / "runs"))
    monkeypatch.setenv("LAB_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("LOG_DIR", str(tmp_path / "logs"))
    return tmp_path
