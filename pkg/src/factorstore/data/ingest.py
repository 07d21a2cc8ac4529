"""
CSV ingestion into the flat-file store.

Input columns are ``symbol``, ``date`` and one column per attribute (usually
``open,high,low,close,volume``); empty cells become NaN. History is
append-only: a row may repeat a stored value exactly, but never change it,
and nothing may be written before a series' first stored date.
"""

import logging
from dataclasses import dataclass
from dataclasses import field
from datetime import date
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
import pandas as pd

from factorstore.core.exceptions import HistoryConflict
from factorstore.core.exceptions import IngestError
from factorstore.core.exceptions import UnknownDates
from factorstore.data.calendar import Calendar
from factorstore.data.pools import InstrumentPool
from factorstore.data.store import FeatureStore


logger = logging.getLogger(__name__)

ALL_POOL = "all"
KEY_COLUMNS = ("symbol", "date")


@dataclass
class SeriesWrite:
    """One planned write: a new series or a tail append."""

    instrument: str
    attribute: str
    start_index: int
    values: np.ndarray
    append: bool


@dataclass
class IngestPlan:
    """Validated writes for one CSV, applied only after every check passed."""

    writes: List[SeriesWrite] = field(default_factory=list)
    spans: Dict[str, Tuple[date, date]] = field(default_factory=dict)
    rows: int = 0

    @property
    def series_count(self) -> int:
        return len(self.writes)


def read_rows(source: Union[str, Path]) -> pd.DataFrame:
    """
    Load and normalize an ingestion CSV.

    Raises:
        IngestError: On missing key columns, unparseable dates or values
    """
    try:
        frame = pd.read_csv(
            source, dtype={"symbol": str, "date": str}, keep_default_na=False
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestError(f"cannot read {source}: {e}") from e

    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in KEY_COLUMNS if c not in frame.columns]
    if missing:
        raise IngestError(f"missing required columns: {', '.join(missing)}")
    attributes = [c for c in frame.columns if c not in KEY_COLUMNS]
    if not attributes:
        raise IngestError("no attribute columns")

    frame["symbol"] = frame["symbol"].str.strip().str.upper()
    try:
        stamps = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d")
        frame["date"] = stamps.dt.date
    except ValueError as e:
        raise IngestError(f"unparseable date: {e}") from e
    for column in attributes:
        cells = frame[column].astype(str).str.strip().to_numpy(dtype=str)
        try:
            frame[column] = np.where(cells == "", "nan", cells).astype(np.float32)
        except ValueError as e:
            raise IngestError(f"column {column!r}: {e}") from e

    duplicated = frame.duplicated(subset=list(KEY_COLUMNS), keep=False)
    if duplicated.any():
        first = frame.loc[duplicated, list(KEY_COLUMNS)].iloc[0]
        raise IngestError(f"duplicate rows for {first['symbol']} on {first['date']}")
    return frame.sort_values(list(KEY_COLUMNS), kind="stable").reset_index(drop=True)


def _same(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a == b) | (np.isnan(a) & np.isnan(b))


def plan_ingest(
    store: FeatureStore,
    frame: pd.DataFrame,
    calendar: Calendar,
    append_only: bool = False,
) -> IngestPlan:
    """
    Validate rows against the calendar and stored history, and plan the writes.

    Rows of one symbol may skip calendar dates; the gaps are stored as NaN.

    Raises:
        UnknownDates: If any row date is not a calendar date
        HistoryConflict: On a changed historical value, a write before a
            series' first date, or any overlap when ``append_only``
    """
    position = {d: i for i, d in enumerate(calendar.timestamps)}
    unknown = sorted({d for d in frame["date"] if d not in position})
    if unknown:
        raise UnknownDates(unknown)

    plan = IngestPlan(rows=len(frame))
    attributes = [c for c in frame.columns if c not in KEY_COLUMNS]
    for symbol, rows in frame.groupby("symbol", sort=True):
        indices = np.array([position[d] for d in rows["date"]], dtype=np.int64)
        lo, hi = int(indices[0]), int(indices[-1])
        plan.spans[symbol] = (calendar.date_at(lo), calendar.date_at(hi))
        for attribute in attributes:
            dense = np.full(hi - lo + 1, np.nan, dtype=np.float32)
            dense[indices - lo] = rows[attribute].to_numpy(dtype=np.float32)
            present = np.zeros(hi - lo + 1, dtype=bool)
            present[indices - lo] = True
            plan.writes.extend(
                _plan_series(store, symbol, attribute, lo, dense, present, append_only)
            )
    return plan


def _plan_series(
    store: FeatureStore,
    symbol: str,
    attribute: str,
    lo: int,
    dense: np.ndarray,
    present: np.ndarray,
    append_only: bool,
) -> List[SeriesWrite]:
    if not store.has_series(symbol, attribute):
        return [SeriesWrite(symbol, attribute, lo, dense, append=False)]

    start, length = store.series_extent(symbol, attribute)
    tail = start + length
    if lo < start:
        raise HistoryConflict(
            f"{symbol}/{attribute}: rows start at index {lo}, before the stored "
            f"start {start}; history cannot be prepended"
        )
    overlap = min(len(dense), tail - lo)
    if overlap > 0:
        if append_only:
            raise HistoryConflict(
                f"{symbol}/{attribute}: append overlaps {overlap} stored values"
            )
        stored = store.read_series(symbol, attribute, None, lo, lo + overlap - 1)
        # Only dates carried by the file are checked against history.
        changed = present[:overlap] & ~_same(stored, dense[:overlap])
        if changed.any():
            k = int(np.argmax(changed))
            raise HistoryConflict(
                f"{symbol}/{attribute}: index {lo + k} would change from "
                f"{stored[k]} to {dense[k]}"
            )
    if lo + len(dense) <= tail:
        return []
    # Gap between the stored tail and the first new row is filled with NaN.
    gap = max(lo - tail, 0)
    padding = np.full(gap, np.nan, dtype=np.float32)
    new = np.concatenate([padding, dense[max(overlap, 0) :]])
    return [SeriesWrite(symbol, attribute, tail, new, append=True)]


def apply_plan(store: FeatureStore, plan: IngestPlan) -> None:
    """Write planned series and widen each symbol's span in the ``all`` pool."""
    for w in plan.writes:
        if w.append:
            store.append_series(w.instrument, w.attribute, None, w.values)
        else:
            store.write_series(w.instrument, w.attribute, None, w.start_index, w.values)

    if not plan.spans:
        return
    memberships = {}
    last_date = None
    if store.has_pool(ALL_POOL):
        current = store.read_pool(ALL_POOL)
        memberships = {s: list(ivs) for s, ivs in current.memberships.items()}
        last_date = current.last_date
    for symbol, (first, last) in plan.spans.items():
        intervals = memberships.get(symbol)
        if intervals:
            first = min(first, intervals[0][0])
            last = max(last, intervals[-1][1])
        memberships[symbol] = [(first, last)]
    store.write_pool(
        InstrumentPool(name=ALL_POOL, memberships=memberships, last_date=last_date)
    )


def ingest_csv(
    store: FeatureStore,
    source: Union[str, Path],
    append_only: bool = False,
    calendar: Optional[Calendar] = None,
) -> IngestPlan:
    """
    Ingest one CSV file; nothing is written unless every row validates.

    Args:
        store: Target store (its calendar must exist)
        source: CSV path
        append_only: Reject rows overlapping stored history
        calendar: Calendar override; defaults to the store's

    Returns:
        The applied plan
    """
    calendar = calendar or store.read_calendar()
    frame = read_rows(source)
    plan = plan_ingest(store, frame, calendar, append_only)
    apply_plan(store, plan)
    logger.info(
        f"Ingested {plan.rows} rows into {plan.series_count} series "
        f"for {len(plan.spans)} instruments"
    )
    return plan
