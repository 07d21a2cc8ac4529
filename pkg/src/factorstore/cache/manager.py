"""Inspection, clearing and size-budget eviction across both disk caches."""

import logging
import shutil
from datetime import datetime
from pathlib import Path
from typing import List
from typing import Literal
from typing import Optional

from pydantic import BaseModel
from pydantic import Field

from factorstore.cache.entries import DATASET_DIR
from factorstore.cache.entries import EXPR_DIR
from factorstore.cache.entries import META_SUFFIX
from factorstore.cache.entries import entry_files
from factorstore.cache.entries import read_meta
from factorstore.core.exceptions import CorruptEntry
from factorstore.core.models import CacheEntryMeta
from factorstore.core.models import DatasetEntryMeta


logger = logging.getLogger(__name__)

CacheKind = Literal["expr", "dataset"]

_LAYOUT = {
    "expr": (EXPR_DIR, CacheEntryMeta),
    "dataset": (DATASET_DIR, DatasetEntryMeta),
}


class CacheEntryInfo(BaseModel):
    """One disk-cache entry as reported by ``cache list``."""

    kind: CacheKind
    stem: str
    key: str
    first: int
    last: int
    version: int
    last_visit: datetime
    size_bytes: int = Field(ge=0)


class CacheManager:
    """Operations over the whole ``<root>/cache`` tree."""

    def __init__(self, cache_dir: Path):
        self.cache_dir = Path(cache_dir)

    def _kinds(self, kind: Optional[CacheKind]) -> List[CacheKind]:
        return [kind] if kind else ["expr", "dataset"]

    def _entry_files(self, kind: CacheKind, stem: str) -> List[Path]:
        return entry_files(self.cache_dir / _LAYOUT[kind][0], stem)

    def list_entries(self, kind: Optional[CacheKind] = None) -> List[CacheEntryInfo]:
        """
        Metadata of every readable entry, expression entries first, then by key.

        Entries with unreadable sidecars are skipped.
        """
        entries = []
        for k in self._kinds(kind):
            directory, model = _LAYOUT[k]
            path = self.cache_dir / directory
            if not path.is_dir():
                continue
            found = []
            for meta_path in path.glob(f"*{META_SUFFIX}"):
                stem = meta_path.name[: -len(META_SUFFIX)]
                try:
                    meta = read_meta(meta_path, model)
                except (CorruptEntry, FileNotFoundError):
                    logger.warning(f"Skipping unreadable cache metadata {meta_path}")
                    continue
                files = self._entry_files(k, stem)
                size = sum(p.stat().st_size for p in files if p.exists())
                found.append(
                    CacheEntryInfo(
                        kind=k,
                        stem=stem,
                        key=meta.key,
                        first=meta.first,
                        last=meta.last,
                        version=meta.version,
                        last_visit=meta.last_visit,
                        size_bytes=size,
                    )
                )
            entries.extend(sorted(found, key=lambda e: e.key))
        return entries

    def total_bytes(self, kind: Optional[CacheKind] = None) -> int:
        """Bytes of all files in the selected cache directories."""
        total = 0
        for k in self._kinds(kind):
            path = self.cache_dir / _LAYOUT[k][0]
            if path.is_dir():
                total += sum(p.stat().st_size for p in path.iterdir() if p.is_file())
        return total

    def clear(self, kind: Optional[CacheKind] = None) -> int:
        """
        Remove the selected caches.

        Returns:
            Number of entries removed
        """
        removed = len(self.list_entries(kind))
        for k in self._kinds(kind):
            path = self.cache_dir / _LAYOUT[k][0]
            if path.is_dir():
                shutil.rmtree(path)
        logger.info(f"Cleared {removed} cache entries ({kind or 'all'})")
        return removed

    def evict(self, entry: CacheEntryInfo) -> None:
        """Delete one entry, sidecar first so it disappears atomically for readers."""
        files = self._entry_files(entry.kind, entry.stem)
        for path in [files[-1]] + files[:-1]:
            path.unlink(missing_ok=True)

    def enforce_budget(self, max_bytes: int) -> int:
        """
        Evict least-recently-visited entries until the caches fit ``max_bytes``.

        Returns:
            Number of entries evicted
        """
        entries = sorted(self.list_entries(), key=lambda e: e.last_visit)
        total = self.total_bytes()
        evicted = 0
        for entry in entries:
            if total <= max_bytes:
                break
            self.evict(entry)
            total -= entry.size_bytes
            evicted += 1
        if evicted:
            logger.info(f"Evicted {evicted} cache entries to fit {max_bytes} bytes")
        return evicted
