# utils/cache.py
from __future__ import annotations

import hashlib
import time
from pathlib import Path
from typing import Any, Optional

import orjson


def make_key(*parts: Any) -> str:
    """Stable cache key from positional parts (floats rendered with repr)."""
    return ":".join(repr(p) if isinstance(p, float) else str(p) for p in parts)


class FileCache:
    """JSON-on-disk cache. ttl_seconds=None keeps entries forever."""

    def __init__(self, cache_dir: str, ttl_seconds: Optional[int] = None) -> None:
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.ttl = ttl_seconds

    def _key_to_path(self, key: str) -> Path:
        key_hash = hashlib.sha256(key.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{key_hash}.json"

    def get(self, key: str) -> Optional[Any]:
        path = self._key_to_path(key)
        if not path.exists():
            return None
        try:
            obj = orjson.loads(path.read_bytes())
            if self.ttl is not None and time.time() - obj.get("ts", 0) > self.ttl:
                path.unlink(missing_ok=True)
                return None
            if obj.get("key") != key:
                return None
            return obj.get("value")
        except (OSError, orjson.JSONDecodeError):
            return None

    def set(self, key: str, value: Any) -> None:
        path = self._key_to_path(key)
        tmp = {
            "ts": time.time(),
            "key": key,
            "value": value,
        }
        path.write_bytes(orjson.dumps(tmp, option=orjson.OPT_SERIALIZE_NUMPY))
