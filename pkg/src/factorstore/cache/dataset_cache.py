"""On-disk dataset cache of combined frames.

An entry is three files under ``<cache_dir>/dataset``:

- ``<stem>.<generation>.frame``: row-major little-endian f32 cells,
  ``rows x len(columns)``
- ``<stem>.<generation>.index``: per row, u32 instrument ordinal then u32 calendar index
- ``<stem>.meta``: :class:`DatasetEntryMeta` JSON (key, covered interval,
  column order, instrument table, per-instrument row spans, payload
  generation, scope stamp)

Rows are sorted by (instrument, calendar index), so any covered sub-range is
extracted with a mask over the index file. A tail append merges the new rows
into a payload of the next generation; the sidecar is written last, and only
then is the previous generation removed.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np

from factorstore.cache.entries import DATASET_DIR
from factorstore.cache.entries import META_SUFFIX
from factorstore.cache.entries import Hit
from factorstore.cache.entries import Miss
from factorstore.cache.entries import PartialTail
from factorstore.cache.entries import entry_files
from factorstore.cache.entries import find_slot
from factorstore.cache.entries import quarantine
from factorstore.cache.entries import refresh_visit
from factorstore.cache.entries import write_meta
from factorstore.cache.locks import KeyedLocks
from factorstore.core.exceptions import CorruptEntry
from factorstore.core.exceptions import NonContiguousAppend
from factorstore.core.models import DatasetEntryMeta
from factorstore.data.series import write_atomic


logger = logging.getLogger(__name__)

FRAME_SUFFIX = ".frame"
INDEX_SUFFIX = ".index"
CELL_DTYPE = np.dtype("<f4")
INDEX_DTYPE = np.dtype("<u4")

Lookup = Union[Hit, PartialTail, Miss]

# Digest of the rows an entry should hold over a covered interval [first, last].
ScopeStamp = Callable[[int, int], str]


@dataclass
class FrameRows:
    """Frame cells with compact row keys.

    ``ordinals[r]`` points into ``instruments``; ``indices[r]`` is a calendar
    index. Rows are sorted by (instrument, index).
    """

    columns: List[str]
    instruments: List[str]
    ordinals: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def empty(cls, columns: Sequence[str]) -> "FrameRows":
        return cls(
            columns=list(columns),
            instruments=[],
            ordinals=np.empty(0, dtype=np.int64),
            indices=np.empty(0, dtype=np.int64),
            values=np.empty((0, len(columns)), dtype=np.float32),
        )

    def row_spans(self) -> List[Tuple[int, int]]:
        """Per instrument ``[start_row, end_row)``, in table order."""
        bounds = np.searchsorted(self.ordinals, np.arange(len(self.instruments) + 1))
        return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def select(self, lo: int, hi: int, columns: Sequence[str]) -> "FrameRows":
        """Rows with index in ``[lo, hi]``, cells reordered to ``columns``."""
        order = [self.columns.index(c) for c in columns]
        mask = (self.indices >= lo) & (self.indices <= hi)
        return FrameRows(
            columns=list(columns),
            instruments=list(self.instruments),
            ordinals=self.ordinals[mask],
            indices=self.indices[mask],
            values=np.ascontiguousarray(self.values[mask][:, order]),
        )


def merge_rows(parts: Iterable[FrameRows]) -> FrameRows:
    """Union of row sets sharing a column order, re-sorted by (instrument, index)."""
    parts = list(parts)
    columns = parts[0].columns
    table = sorted({s for p in parts for s in p.instruments})
    position = {s: k for k, s in enumerate(table)}
    ordinals, indices, values = [], [], []
    for part in parts:
        if part.columns != columns:
            raise ValueError("cannot merge rows with different columns")
        remap = np.array([position[s] for s in part.instruments], dtype=np.int64)
        if len(part):
            ordinals.append(remap[part.ordinals])
        else:
            ordinals.append(np.empty(0, dtype=np.int64))
        indices.append(np.asarray(part.indices, dtype=np.int64))
        values.append(part.values)
    ordinals = np.concatenate(ordinals)
    indices = np.concatenate(indices)
    values = np.concatenate(values).reshape(-1, len(columns))
    order = np.lexsort((indices, ordinals))
    return FrameRows(
        columns=list(columns),
        instruments=table,
        ordinals=ordinals[order],
        indices=indices[order],
        values=np.ascontiguousarray(values[order], dtype=np.float32),
    )


def write_payload(prefix: Path, rows: FrameRows) -> None:
    """Write the ``.frame`` then the ``.index`` file of a frame, each atomically."""
    cells = np.ascontiguousarray(rows.values, dtype=CELL_DTYPE)
    keys = np.empty((len(rows), 2), dtype=INDEX_DTYPE)
    keys[:, 0] = rows.ordinals
    keys[:, 1] = rows.indices
    write_atomic(prefix.with_name(prefix.name + FRAME_SUFFIX), cells.tobytes())
    write_atomic(prefix.with_name(prefix.name + INDEX_SUFFIX), keys.tobytes())


def read_payload(prefix: Path, meta: DatasetEntryMeta) -> FrameRows:
    """
    Read a frame payload described by ``meta``.

    Raises:
        CorruptEntry: If a file is missing or its size disagrees with ``meta``
    """
    ncols = len(meta.columns)
    frame_path = prefix.with_name(prefix.name + FRAME_SUFFIX)
    index_path = prefix.with_name(prefix.name + INDEX_SUFFIX)
    try:
        cells = np.fromfile(frame_path, dtype=CELL_DTYPE)
        keys = np.fromfile(index_path, dtype=INDEX_DTYPE)
    except FileNotFoundError as exc:
        raise CorruptEntry(f"missing payload for {meta.key!r}") from exc
    if cells.size != meta.rows * ncols or keys.size != meta.rows * 2:
        raise CorruptEntry(
            f"payload sizes ({cells.size} cells, {keys.size // 2} keys) disagree with "
            f"{meta.rows} rows x {ncols} columns for {meta.key!r}"
        )
    keys = keys.reshape(meta.rows, 2).astype(np.int64)
    return FrameRows(
        columns=list(meta.columns),
        instruments=list(meta.instruments),
        ordinals=keys[:, 0].copy(),
        indices=keys[:, 1].copy(),
        values=cells.reshape(meta.rows, ncols).astype(np.float32),
    )


def dataset_key(canonicals: Iterable[str], pool_key: str, frequency: str) -> str:
    """Key text from sorted distinct canonical expressions, pool and frequency."""
    return f"{';'.join(sorted(set(canonicals)))}|{pool_key}|{frequency}"


class DatasetCache:
    """Dataset cache rooted at ``<cache_dir>/dataset``."""

    def __init__(self, cache_dir: Path, visit_refresh_seconds: float = 3600.0):
        self.cache_dir = Path(cache_dir)
        self.directory = self.cache_dir / DATASET_DIR
        self.visit_refresh_seconds = visit_refresh_seconds
        self.locks = KeyedLocks()

    def _prefix(self, stem: str, generation: int) -> Path:
        return self.directory / f"{stem}.{generation}"

    def _find(self, key: str) -> Tuple[str, Optional[DatasetEntryMeta]]:
        return find_slot(self.directory, key, DatasetEntryMeta, self.cache_dir)

    def _load(
        self, key: str
    ) -> Tuple[str, Optional[DatasetEntryMeta], Optional[FrameRows]]:
        """
        Sidecar and payload of the entry for ``key``.

        A payload removed by a concurrent writer is re-read under the newer
        sidecar; any other mismatch quarantines the entry.
        """
        stem, meta = self._find(key)
        while meta is not None:
            try:
                prefix = self._prefix(stem, meta.generation)
                return stem, meta, read_payload(prefix, meta)
            except CorruptEntry as exc:
                stem, current = self._find(key)
                if current is not None and current.generation != meta.generation:
                    meta = current
                    continue
                if current is not None:
                    files = entry_files(self.directory, stem)
                    quarantine(self.cache_dir, files, str(exc))
                return stem, None, None
        return stem, None, None

    def lookup(
        self,
        key: str,
        lo: int,
        hi: int,
        columns: Sequence[str],
        scope_stamp: Optional[ScopeStamp] = None,
    ) -> Lookup:
        """
        Classify the stored entry for ``key`` against ``[lo, hi]``.

        Args:
            key: Full key text (see :func:`dataset_key`)
            lo: First calendar index
            hi: Last calendar index
            columns: Canonical expressions in the order the caller wants cells
            scope_stamp: Digest of the current scope over an interval; an entry
                whose stored digest differs is a Miss

        Returns:
            Hit with :class:`FrameRows`, PartialTail with the covered tail index,
            or Miss
        """
        if lo > hi:
            raise ValueError(f"invalid index range [{lo}, {hi}]")
        stem, meta = self._find(key)
        if meta is None or meta.first > lo:
            return Miss()
        if scope_stamp is not None and meta.scope_stamp != scope_stamp(
            meta.first, meta.last
        ):
            logger.info(f"dataset cache entry {key!r} predates a membership change")
            return Miss()
        if meta.last < hi:
            return PartialTail(meta.last)
        stem, meta, rows = self._load(key)
        if meta is None or rows is None or meta.first > lo or meta.last < hi:
            return Miss()
        meta_path = self.directory / f"{stem}{META_SUFFIX}"
        refresh_visit(meta_path, meta, self.visit_refresh_seconds)
        logger.debug(f"dataset cache hit {key!r} [{lo}, {hi}]")
        return Hit(rows.select(lo, hi, columns))

    def write(
        self,
        key: str,
        first: int,
        last: int,
        rows: FrameRows,
        version: int,
        scope_stamp: Optional[ScopeStamp] = None,
    ) -> None:
        """Write a complete entry covering ``[first, last]``, replacing any other."""
        stem, previous = self._find(key)
        generation = 0 if previous is None else previous.generation + 1
        stamp = scope_stamp(first, last) if scope_stamp is not None else ""
        self._store(stem, key, first, last, rows, version, generation, stamp)
        logger.debug(f"dataset cache write {key!r} [{first}, {last}] rows={len(rows)}")

    def append(
        self,
        key: str,
        rows: FrameRows,
        new_first: int,
        new_last: int,
        version: int,
        scope_stamp: Optional[ScopeStamp] = None,
    ) -> None:
        """
        Extend an entry with the rows of ``[new_first, new_last]``.

        Raises:
            KeyError: If no valid entry exists for ``key``
            NonContiguousAppend: If ``new_first`` is not the covered tail + 1
        """
        stem, meta, stored = self._load(key)
        if meta is None or stored is None:
            raise KeyError(key)
        if new_first != meta.last + 1:
            raise NonContiguousAppend(
                f"append starting at {new_first} does not abut "
                f"covered tail {meta.last} for {key!r}"
            )
        merged = merge_rows([stored, rows.select(new_first, new_last, stored.columns)])
        stamp = scope_stamp(meta.first, new_last) if scope_stamp is not None else ""
        generation = meta.generation + 1
        self._store(stem, key, meta.first, new_last, merged, version, generation, stamp)
        logger.debug(
            f"dataset cache append {key!r} [{new_first}, {new_last}] rows={len(rows)}"
        )

    def _store(
        self,
        stem: str,
        key: str,
        first: int,
        last: int,
        rows: FrameRows,
        version: int,
        generation: int,
        scope_stamp: str,
    ) -> None:
        # The previous generation stays readable until the new sidecar lands.
        prefix = self._prefix(stem, generation)
        write_payload(prefix, rows)
        meta = DatasetEntryMeta(
            key=key,
            first=first,
            last=last,
            version=version,
            columns=rows.columns,
            instruments=rows.instruments,
            row_spans=rows.row_spans(),
            rows=len(rows),
            generation=generation,
            scope_stamp=scope_stamp,
        )
        write_meta(self.directory / f"{stem}{META_SUFFIX}", meta)
        for path in entry_files(self.directory, stem)[:-1]:
            if not path.name.startswith(f"{prefix.name}."):
                path.unlink(missing_ok=True)
