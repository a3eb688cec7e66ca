"""
On-disk cache of computed sweep points.

Density-evolution points and simulation chunks are stored under the SHA-256
of the canonical JSON of everything that determines them, in the user cache
directory.
"""

import hashlib
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Optional

import diskcache
from platformdirs import user_cache_dir

logger = logging.getLogger(__name__)


class ResultCache:
    """
    Disk-based cache of experiment results.

    Entries never expire: a key changes whenever any input changes. Errors
    from the cache backend are swallowed and treated as misses.
    """

    def __init__(self, cache_dir: Optional[Path] = None):
        """
        Initialize the result cache.

        Args:
            cache_dir: Directory for cache storage. If None, uses the user cache directory.
        """
        if cache_dir is None:
            cache_dir = Path(user_cache_dir("alohacalc")) / "results"

        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.cache = diskcache.Cache(str(self.cache_dir))

    @staticmethod
    def make_key(inputs: Any) -> str:
        """
        SHA-256 of the canonical JSON of `inputs`.

        Keys are sorted and separators fixed so equal trees give equal keys.
        """
        canonical = json.dumps(inputs, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def get(self, inputs: Any) -> Optional[Any]:
        """
        Look up a stored result.

        Returns:
            The stored value, or None on a miss or cache error
        """
        try:
            entry = self.cache.get(self.make_key(inputs))
        except Exception:
            return None
        if entry is None:
            return None
        logger.info("Cache hit for %s", entry.get("label", "result"))
        return entry["value"]

    def set(self, inputs: Any, value: Any, label: str = "") -> bool:
        """
        Store a result.

        Returns:
            True if stored, False if the cache could not be written
        """
        entry = {"value": value, "label": label, "cached_at": datetime.now()}
        try:
            self.cache.set(self.make_key(inputs), entry)
            return True
        except Exception:
            return False

    def clear(self) -> None:
        """Clear all cached entries."""
        self.cache.clear()

    def get_stats(self) -> dict:
        """
        Get cache statistics.

        Returns:
            Dict with keys: size_bytes, entry_count, directory
        """
        return {
            "size_bytes": self.cache.volume(),
            "entry_count": len(self.cache),
            "directory": str(self.cache_dir),
        }

    def close(self) -> None:
        """Close cache and release resources."""
        self.cache.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
