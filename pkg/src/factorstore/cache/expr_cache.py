"""On-disk expression cache: one series file per (expression, instrument, frequency).

Entries use the raw series layout (u32 start index, then f32 values), so a
covered sub-range is read by seeking exactly as for stored attributes. Entries
grow only at the tail; the ``.meta`` sidecar is rewritten atomically after
every payload change and bounds what readers may use.
"""

import logging
import os
from pathlib import Path
from typing import Callable
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np

from factorstore.cache.entries import EXPR_DIR
from factorstore.cache.entries import META_SUFFIX
from factorstore.cache.entries import Hit
from factorstore.cache.entries import Miss
from factorstore.cache.entries import PartialTail
from factorstore.cache.entries import find_slot
from factorstore.cache.entries import quarantine
from factorstore.cache.entries import refresh_visit
from factorstore.cache.entries import write_meta
from factorstore.cache.locks import KeyedLocks
from factorstore.core.exceptions import CorruptEntry
from factorstore.core.exceptions import NonContiguousAppend
from factorstore.core.models import CacheEntryMeta
from factorstore.data import series


logger = logging.getLogger(__name__)

PAYLOAD_SUFFIX = ".bin"

Lookup = Union[Hit, PartialTail, Miss]


def expr_key(canonical: str, instrument: str, frequency: str) -> str:
    """Full key text of an expression-cache entry."""
    return f"{canonical}|{instrument.upper()}|{frequency}"


class ExpressionCache:
    """Expression cache rooted at ``<cache_dir>/expr``."""

    def __init__(self, cache_dir: Path, visit_refresh_seconds: float = 3600.0):
        """
        Initialize the cache.

        Args:
            cache_dir: Cache root (``<store root>/cache``)
            visit_refresh_seconds: Minimum age before a hit rewrites ``last_visit``
        """
        self.cache_dir = Path(cache_dir)
        self.directory = self.cache_dir / EXPR_DIR
        self.visit_refresh_seconds = visit_refresh_seconds
        self.locks = KeyedLocks()

    def _paths(self, stem: str) -> Tuple[Path, Path]:
        payload = self.directory / f"{stem}{PAYLOAD_SUFFIX}"
        return payload, self.directory / f"{stem}{META_SUFFIX}"

    def _slot(self, key: str) -> Tuple[str, Optional[CacheEntryMeta]]:
        return find_slot(self.directory, key, CacheEntryMeta, self.cache_dir)

    def _locate(self, key: str) -> Tuple[str, Optional[CacheEntryMeta]]:
        stem, meta = self._slot(key)
        if meta is None:
            return stem, None
        payload, meta_path = self._paths(stem)
        try:
            self._validate(payload, meta)
        except CorruptEntry as exc:
            quarantine(self.cache_dir, [payload, meta_path], str(exc))
            return stem, None
        return stem, meta

    @staticmethod
    def _validate(payload: Path, meta: CacheEntryMeta) -> None:
        try:
            start, count = series.extent(payload)
        except (FileNotFoundError, IndexError, ValueError) as exc:
            raise CorruptEntry(
                f"missing or truncated payload for {meta.key!r}"
            ) from exc
        # A longer payload is an append whose sidecar is not yet written.
        if start != meta.first or count < meta.length:
            raise CorruptEntry(
                f"payload [{start}, +{count}) does not cover "
                f"[{meta.first}, {meta.last}] for {meta.key!r}"
            )

    def lookup(self, key: str, lo: int, hi: int) -> Lookup:
        """
        Classify the stored entry for ``key`` against ``[lo, hi]``.

        Returns:
            Hit with the float32 values, PartialTail with the covered tail index,
            or Miss (also for entries that failed validation and were quarantined)
        """
        if lo > hi:
            raise ValueError(f"invalid index range [{lo}, {hi}]")
        stem, meta = self._locate(key)
        if meta is None or meta.first > lo:
            return Miss()
        payload, meta_path = self._paths(stem)
        if meta.last < hi:
            return PartialTail(meta.last)
        values = series.read_range(payload, lo, hi)
        refresh_visit(meta_path, meta, self.visit_refresh_seconds)
        logger.debug(f"expr cache hit {key!r} [{lo}, {hi}]")
        return Hit(values)

    def write(self, key: str, first: int, values: np.ndarray, version: int) -> None:
        """Write a complete entry covering ``[first, first + len(values) - 1]``."""
        if len(values) == 0:
            raise ValueError("cannot cache an empty range")
        stem, _ = self._slot(key)
        payload, meta_path = self._paths(stem)
        last = first + len(values) - 1
        series.write(payload, first, values)
        write_meta(
            meta_path,
            CacheEntryMeta(key=key, first=first, last=last, version=version),
        )
        logger.debug(f"expr cache write {key!r} [{first}, {last}]")

    def append(
        self, key: str, new_values: np.ndarray, new_last_index: int, version: int
    ) -> None:
        """
        Extend an entry at its tail.

        Raises:
            KeyError: If no valid entry exists for ``key``
            NonContiguousAppend: If the new values do not start at covered tail + 1
        """
        stem, meta = self._locate(key)
        if meta is None:
            raise KeyError(key)
        new_first = new_last_index - len(new_values) + 1
        if new_first != meta.last + 1:
            raise NonContiguousAppend(
                f"append starting at {new_first} does not abut "
                f"covered tail {meta.last} for {key!r}"
            )
        if len(new_values) == 0:
            return
        payload, meta_path = self._paths(stem)
        expected = series.HEADER_SIZE + series.VALUE_SIZE * meta.length
        if os.path.getsize(payload) != expected:
            os.truncate(payload, expected)
        series.append(payload, new_values)
        update = {"last": new_last_index, "version": version}
        write_meta(meta_path, meta.model_copy(update=update))
        logger.debug(f"expr cache append {key!r} [{new_first}, {new_last_index}]")

    def get_or_compute(
        self,
        key: str,
        lo: int,
        hi: int,
        compute: Callable[[int, int], np.ndarray],
        version: int,
        cacheable_hi: Optional[int] = None,
    ) -> Tuple[np.ndarray, str]:
        """
        Values for ``[lo, hi]``, computing only what the stored entry lacks.

        At most one computation per key runs at a time in this process;
        concurrent requesters wait and then read the completed entry.

        Args:
            key: Full key text (see :func:`expr_key`)
            lo: First calendar index
            hi: Last calendar index
            compute: Callback producing float32 values for an index range
            version: Calendar length stamped on written entries
            cacheable_hi: Last index whose value is final; later values are
                returned but never stored. ``None`` stores the whole range.

        Returns:
            (values, outcome) with outcome one of ``hit``, ``partial``, ``miss``
        """
        keep = hi if cacheable_hi is None else min(hi, cacheable_hi)
        with self.locks.hold(key):
            found = self.lookup(key, lo, hi)
            if isinstance(found, Hit):
                return found.value, "hit"
            if isinstance(found, PartialTail):
                tail_lo = found.covered_hi + 1
                tail = np.asarray(compute(tail_lo, hi), dtype=np.float32)
                if keep >= tail_lo:
                    self.append(key, tail[: keep - tail_lo + 1], keep, version)
                parts = [tail[max(lo - tail_lo, 0) :]]
                if lo < tail_lo:
                    stem, _ = self._locate(key)
                    payload, _ = self._paths(stem)
                    parts.insert(0, series.read_range(payload, lo, tail_lo - 1))
                return np.concatenate(parts), "partial"
            values = np.asarray(compute(lo, hi), dtype=np.float32)
            if keep >= lo:
                self.write(key, lo, values[: keep - lo + 1], version)
            return values, "miss"
