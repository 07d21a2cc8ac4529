"""
Aligned result frames and the pipeline stages that assemble them.

A build produces one :class:`Block` per instrument (calendar indices and a
cell matrix). Row labels are attached by :func:`convert_index`, rows outside
pool membership are dropped with :func:`filter_by_pool`, and :func:`combine`
concatenates blocks into an :class:`AlignedFrame` in a fixed order.
"""

import hashlib
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Union

import numpy as np
import pandas as pd

from factorstore.cache.dataset_cache import FrameRows
from factorstore.cache.dataset_cache import read_payload
from factorstore.cache.dataset_cache import write_payload
from factorstore.cache.entries import META_SUFFIX
from factorstore.cache.entries import read_meta
from factorstore.cache.entries import write_meta
from factorstore.core.models import DatasetEntryMeta
from factorstore.data.calendar import Calendar
from factorstore.data.pools import IndexInterval


@dataclass
class Block:
    """Per-instrument rows: ascending calendar indices and their cell matrix."""

    instrument: str
    indices: np.ndarray
    values: np.ndarray
    dates: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.indices)

    def take(self, mask: np.ndarray) -> "Block":
        """Rows selected by a boolean mask."""
        return Block(
            instrument=self.instrument,
            indices=self.indices[mask],
            values=self.values[mask],
            dates=None if self.dates is None else self.dates[mask],
        )


def convert_index(block: Block, calendar: Calendar) -> Block:
    """Attach timestamp labels to a block's calendar positions."""
    block.dates = calendar.array[block.indices]
    return block


def filter_by_pool(
    indices: np.ndarray, intervals: Sequence[IndexInterval]
) -> np.ndarray:
    """
    Row mask keeping exactly the rows whose index lies in one of ``intervals``.

    Args:
        indices: Calendar index of each row
        intervals: Closed index intervals from pool resolution

    Returns:
        np.ndarray: Boolean mask, all False for no intervals
    """
    mask = np.zeros(len(indices), dtype=bool)
    for a, b in intervals:
        mask |= (indices >= a) & (indices <= b)
    return mask


@dataclass
class AlignedFrame:
    """
    Combined result table keyed by (instrument, timestamp), one column per expression.

    Rows are sorted by instrument symbol, then calendar index. Cells are
    float32 with NaN for missing values.
    """

    columns: List[str]
    instruments: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=object))
    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    dates: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype="datetime64[D]")
    )
    values: Optional[np.ndarray] = None
    lo: int = 0
    hi: int = 0

    def __post_init__(self) -> None:
        if self.values is None:
            self.values = np.empty((0, len(self.columns)), dtype=np.float32)
        if self.values.shape != (len(self.indices), len(self.columns)):
            raise ValueError(
                f"cells {self.values.shape} do not match {len(self.indices)} rows x "
                f"{len(self.columns)} columns"
            )

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def shape(self):
        return self.values.shape

    def row_keys(self) -> List[tuple]:
        """(instrument, calendar index) per row."""
        return list(zip(self.instruments.tolist(), self.indices.tolist()))

    def symbols(self) -> List[str]:
        """Distinct instruments in row order."""
        return sorted(set(self.instruments.tolist()))

    def digest(self) -> str:
        """64-bit stable hash over row keys and cells in row order, hex-encoded."""
        h = hashlib.blake2b(digest_size=8)
        h.update("\x1f".join(self.columns).encode("utf-8"))
        h.update("\n".join(self.instruments.tolist()).encode("utf-8"))
        h.update(np.asarray(self.indices, dtype="<i8").tobytes())
        cells = np.asarray(self.values, dtype="<f4").copy()
        cells[np.isnan(cells)] = np.nan
        h.update(cells.tobytes())
        return h.hexdigest()

    def first_difference(self, other: "AlignedFrame") -> Optional[str]:
        """Description of the first row where two frames differ, or None."""
        for r in range(max(len(self), len(other))):
            if r >= len(self) or r >= len(other):
                return f"row {r}: present in only one frame"
            mine = (self.instruments[r], int(self.indices[r]))
            theirs = (other.instruments[r], int(other.indices[r]))
            a = self.values[r]
            b = other.values[r]
            same_cells = len(a) == len(b) and bool(
                np.all((a == b) | (np.isnan(a) & np.isnan(b)))
            )
            if mine != theirs or not same_cells:
                return f"row {r}: {mine} {a.tolist()} vs {theirs} {b.tolist()}"
        return None

    def to_pandas(self) -> pd.DataFrame:
        """DataFrame indexed by a (instrument, datetime) MultiIndex."""
        index = pd.MultiIndex.from_arrays(
            [self.instruments.astype(str), pd.to_datetime(self.dates)],
            names=["instrument", "datetime"],
        )
        return pd.DataFrame(self.values, index=index, columns=list(self.columns))

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> Optional[str]:
        """
        CSV with header ``instrument,datetime,<expr...>``; NaN is an empty cell.

        Returns:
            The CSV text when ``path`` is None
        """
        table = self.to_pandas().reset_index()
        return table.to_csv(
            path,
            index=False,
            float_format="%.9g",
            na_rep="",
            date_format="%Y-%m-%d",
            lineterminator="\n",
        )

    def to_rows(self) -> FrameRows:
        """Compact row-key form used by the dataset-cache layout."""
        table = self.symbols()
        position = {s: k for k, s in enumerate(table)}
        ordinals = np.array(
            [position[s] for s in self.instruments.tolist()], dtype=np.int64
        )
        return FrameRows(
            columns=list(self.columns),
            instruments=table,
            ordinals=ordinals,
            indices=np.asarray(self.indices, dtype=np.int64),
            values=np.asarray(self.values, dtype=np.float32),
        )

    @classmethod
    def from_rows(
        cls,
        rows: FrameRows,
        calendar: Calendar,
        lo: int,
        hi: int,
        labels: Optional[Sequence[str]] = None,
    ) -> "AlignedFrame":
        """Expand compact rows into a frame, optionally relabelling the columns."""
        table = np.array(rows.instruments, dtype=object)
        return cls(
            columns=list(labels) if labels is not None else list(rows.columns),
            instruments=(
                table[rows.ordinals] if len(rows) else np.empty(0, dtype=object)
            ),
            indices=np.asarray(rows.indices, dtype=np.int64),
            dates=calendar.array[rows.indices],
            values=np.asarray(rows.values, dtype=np.float32),
            lo=lo,
            hi=hi,
        )

    def write_frame(self, prefix: Union[str, Path], key: Optional[str] = None) -> None:
        """Write ``<prefix>.frame``, ``<prefix>.index`` and ``<prefix>.meta``."""
        prefix = Path(prefix)
        rows = self.to_rows()
        write_payload(prefix, rows)
        meta = DatasetEntryMeta(
            key=key if key is not None else ";".join(self.columns),
            first=self.lo,
            last=self.hi,
            version=0,
            columns=rows.columns,
            instruments=rows.instruments,
            row_spans=rows.row_spans(),
            rows=len(rows),
        )
        write_meta(prefix.with_name(prefix.name + META_SUFFIX), meta)

    @classmethod
    def read_frame(cls, prefix: Union[str, Path], calendar: Calendar) -> "AlignedFrame":
        """
        Load a frame written by :meth:`write_frame`.

        Raises:
            CorruptEntry: If the payload disagrees with its sidecar
        """
        prefix = Path(prefix)
        meta_path = prefix.with_name(prefix.name + META_SUFFIX)
        meta = read_meta(meta_path, DatasetEntryMeta)
        rows = read_payload(prefix, meta)
        return cls.from_rows(rows, calendar, meta.first, meta.last)


def combine(
    blocks: Union[Mapping[str, Block], Iterable[Block]],
    columns: Sequence[str],
    lo: int = 0,
    hi: int = 0,
) -> AlignedFrame:
    """
    Concatenate per-instrument blocks: symbols ascending, indices ascending
    within a symbol. Empty blocks contribute nothing.

    Args:
        blocks: Blocks, or a mapping of symbol to block
        columns: Column labels
        lo: First index of the query range
        hi: Last index of the query range

    Returns:
        AlignedFrame: Result independent of the blocks' arrival order
    """
    items = list(blocks.values()) if isinstance(blocks, Mapping) else list(blocks)
    items = sorted((b for b in items if len(b)), key=lambda b: b.instrument)
    if not items:
        return AlignedFrame(columns=list(columns), lo=lo, hi=hi)
    instruments, indices, dates, values = [], [], [], []
    for block in items:
        order = np.argsort(block.indices, kind="stable")
        instruments.append(np.full(len(block), block.instrument, dtype=object))
        indices.append(np.asarray(block.indices, dtype=np.int64)[order])
        if block.dates is not None:
            dates.append(block.dates[order])
        values.append(np.asarray(block.values, dtype=np.float32)[order])
    if len(dates) != len(items):
        raise ValueError("combine requires blocks with converted indices")
    return AlignedFrame(
        columns=list(columns),
        instruments=np.concatenate(instruments),
        indices=np.concatenate(indices),
        dates=np.concatenate(dates),
        values=np.ascontiguousarray(np.concatenate(values)),
        lo=lo,
        hi=hi,
    )
