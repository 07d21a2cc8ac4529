"""
Staged dataset builder.

A build resolves the instrument scope, then runs five measured stages:

- load: raw series reads and expression-cache reads
- compute: expression evaluation
- convert_index: attaching (instrument, timestamp) row labels
- filter_pool: dropping rows outside pool membership
- combine: ordered concatenation into one frame

A dataset-cache hit skips all of them. Instruments are independent, so load
and compute run per instrument, inline or in a process pool.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from factorstore.cache.dataset_cache import DatasetCache
from factorstore.cache.dataset_cache import FrameRows
from factorstore.cache.dataset_cache import ScopeStamp
from factorstore.cache.dataset_cache import dataset_key
from factorstore.cache.dataset_cache import merge_rows
from factorstore.cache.entries import Hit
from factorstore.cache.entries import PartialTail
from factorstore.cache.entries import hash_key
from factorstore.cache.expr_cache import ExpressionCache
from factorstore.cache.expr_cache import expr_key
from factorstore.cache.manager import CacheManager
from factorstore.cache.memo import MemoCache
from factorstore.core.exceptions import MissingSeries
from factorstore.core.models import STAGES
from factorstore.core.models import BuildConfig
from factorstore.core.models import EvalStats
from factorstore.core.models import QuerySpec
from factorstore.core.models import StageTimings
from factorstore.core.settings import Settings
from factorstore.core.settings import get_settings
from factorstore.data.calendar import Calendar
from factorstore.data.pools import IndexInterval
from factorstore.data.provider import SeriesProvider
from factorstore.data.provider import StoreProvider
from factorstore.data.store import FeatureStore
from factorstore.dataset.frame import AlignedFrame
from factorstore.dataset.frame import Block
from factorstore.dataset.frame import combine
from factorstore.dataset.frame import convert_index
from factorstore.dataset.frame import filter_by_pool
from factorstore.expr.evaluator import Evaluator
from factorstore.expr.nodes import Node
from factorstore.expr.nodes import attributes
from factorstore.expr.parser import parse
from factorstore.utils.time_utils import Stopwatch


logger = logging.getLogger(__name__)

CACHE_DIR = "cache"


class _TimedProvider(SeriesProvider):
    """Provider wrapper accumulating the seconds spent in raw reads."""

    def __init__(self, inner: SeriesProvider):
        self.inner = inner
        self.seconds = 0.0

    @property
    def frequency(self) -> str:
        return self.inner.frequency

    def calendar(self) -> Calendar:
        return self.inner.calendar()

    def read_series(
        self, instrument: str, attribute: str, lo: int, hi: int
    ) -> np.ndarray:
        start = time.perf_counter()
        try:
            return self.inner.read_series(instrument, attribute, lo, hi)
        finally:
            self.seconds += time.perf_counter() - start

    def series_tail(self, instrument: str, attribute: str) -> int:
        return self.inner.series_tail(instrument, attribute)

    def has_series(self, instrument: str, attribute: str) -> bool:
        return self.inner.has_series(instrument, attribute)

    def has_instrument(self, instrument: str) -> bool:
        return self.inner.has_instrument(instrument)


@dataclass
class InstrumentTask:
    """Everything one worker needs to compute one instrument's block."""

    instrument: str
    expressions: List[str]
    lo: int
    hi: int
    provider: SeriesProvider
    cache_dir: Optional[Path]
    frequency: str
    version: int
    memo_capacity: int
    visit_refresh_seconds: float


@dataclass
class InstrumentResult:
    instrument: str
    indices: np.ndarray
    values: np.ndarray
    final_hi: int
    stats: EvalStats
    load_seconds: float
    compute_seconds: float


def compute_instrument(task: InstrumentTask) -> InstrumentResult:
    """
    Evaluate every distinct expression for one instrument over ``[task.lo, task.hi]``.

    With a cache directory, each expression goes through the expression cache
    and only missing ranges are evaluated. Columns follow ``task.expressions``.
    Values past the stored tail of an attribute they read are not final, so
    they are never cached and ``final_hi`` reports the last final index.
    """
    provider = _TimedProvider(task.provider)
    stats = EvalStats()
    evaluator = Evaluator(provider, MemoCache(task.memo_capacity), stats)
    cache = (
        ExpressionCache(task.cache_dir, task.visit_refresh_seconds)
        if task.cache_dir is not None
        else None
    )
    n = task.hi - task.lo + 1
    values = np.empty((n, len(task.expressions)), dtype=np.float32)
    evaluating = 0.0
    total = 0.0

    def compute(node, a: int, b: int) -> np.ndarray:
        nonlocal evaluating
        start = time.perf_counter()
        try:
            return evaluator.evaluate(node, task.instrument, a, b)
        finally:
            evaluating += time.perf_counter() - start

    def data_tail(node: Node) -> int:
        tail = task.hi
        for attribute in attributes(node):
            try:
                tail = min(tail, provider.series_tail(task.instrument, attribute))
            except MissingSeries:
                # Evaluation reports the missing attribute.
                tail = -1
        return tail

    final_hi = task.hi

    for col, text in enumerate(task.expressions):
        node = parse(text)
        start = time.perf_counter()
        node_hi = data_tail(node)
        final_hi = min(final_hi, node_hi)
        if cache is None:
            values[:, col] = compute(node, task.lo, task.hi)
        else:
            key = expr_key(node.key, task.instrument, task.frequency)
            column, outcome = cache.get_or_compute(
                key,
                task.lo,
                task.hi,
                lambda a, b: compute(node, a, b),
                task.version,
                cacheable_hi=node_hi,
            )
            values[:, col] = column
            if outcome == "hit":
                stats.expr_cache_hits += 1
            elif outcome == "partial":
                stats.expr_cache_partials += 1
            else:
                stats.expr_cache_misses += 1
        total += time.perf_counter() - start

    compute_seconds = max(evaluating - provider.seconds, 0.0)
    return InstrumentResult(
        instrument=task.instrument,
        indices=np.arange(task.lo, task.hi + 1, dtype=np.int64),
        values=values,
        final_hi=final_hi,
        stats=stats,
        load_seconds=max(total - compute_seconds, 0.0),
        compute_seconds=compute_seconds,
    )


class DatasetBuilder:
    """
    Builds aligned frames for queries against one store.

    Attributes:
        stats: Counters aggregated over the last build
        timings: Stage timings of the last build
    """

    def __init__(
        self,
        root: Path,
        config: Optional[BuildConfig] = None,
        frequency: str = "day",
        provider: Optional[SeriesProvider] = None,
        visit_refresh_seconds: float = 3600.0,
        cache_size_budget_bytes: Optional[int] = None,
    ):
        """
        Initialize the builder.

        Args:
            root: Store root
            config: Cache and parallelism switches
            frequency: Calendar frequency
            provider: Series source; defaults to the store under ``root``
            visit_refresh_seconds: Throttle for cache ``last_visit`` rewrites
            cache_size_budget_bytes: Disk-cache budget enforced after each build
        """
        self.root = Path(root)
        self.config = config or BuildConfig()
        self.frequency = frequency
        self.provider = provider or StoreProvider(self.root, frequency)
        self.store = FeatureStore(self.root, frequency)
        self.cache_dir = self.root / CACHE_DIR
        self.visit_refresh_seconds = visit_refresh_seconds
        self.cache_size_budget_bytes = cache_size_budget_bytes
        self.dataset_cache = DatasetCache(self.cache_dir, visit_refresh_seconds)
        self.stats = EvalStats()
        self.timings = StageTimings()

    @classmethod
    def from_settings(
        cls, settings: Settings, config: Optional[BuildConfig] = None
    ) -> "DatasetBuilder":
        """Builder configured from application settings."""
        config = config or BuildConfig(
            use_expr_cache=settings.use_expr_cache,
            use_dataset_cache=settings.use_dataset_cache,
            workers=settings.workers,
            memo_capacity=settings.memo_capacity,
        )
        return cls(
            settings.root,
            config,
            frequency=settings.frequency,
            visit_refresh_seconds=settings.visit_refresh_seconds,
            cache_size_budget_bytes=settings.cache_size_budget_bytes,
        )

    # Scope

    def resolve_scope(
        self, spec: QuerySpec, lo: int, hi: int
    ) -> Dict[str, List[IndexInterval]]:
        """
        Instrument membership over ``[lo, hi]``.

        Raises:
            MissingPool: If the query names an unknown pool
        """
        if spec.instruments is not None:
            return {symbol: [(lo, hi)] for symbol in spec.instruments}
        return self.store.resolve_pool(spec.pool, lo, hi, self.frequency)

    def cacheable_hi(self, spec: QuerySpec, calendar: Calendar, hi: int) -> int:
        """
        Last index a dataset-cache entry may cover.

        Pool membership after the pool's last recorded date can still change,
        so rows past it are never cached.
        """
        if spec.pool is None:
            return hi
        pool = self.store.read_pool(spec.pool)
        if pool.last_date is None or pool.last_date < calendar.timestamps[0]:
            return -1
        return min(hi, calendar.timestamp_to_index(pool.last_date, "backward"))

    def scope_stamp(self, spec: QuerySpec, calendar: Calendar) -> Optional[ScopeStamp]:
        """
        Digest of pool membership over a covered interval.

        A pool can gain instruments over dates a dataset-cache entry already
        covers (an ingest adding a new symbol to ``all``); a changed digest
        turns such an entry into a miss. Explicit instrument lists are part
        of the key, so they need no stamp.
        """
        if spec.pool is None:
            return None
        pool = self.store.read_pool(spec.pool)

        def stamp(first: int, last: int) -> str:
            membership = pool.resolve(calendar, first, last)
            return hash_key(repr(sorted(membership.items())))

        return stamp

    # Build

    def build(self, spec: QuerySpec) -> Tuple[AlignedFrame, StageTimings]:
        """
        Build the aligned frame of a query.

        Raises:
            EmptyRange: If no calendar points fall in ``[spec.start, spec.end]``
            MissingPool: If the pool does not exist
            MissingSeries: If an instrument has no data
            UnknownAttribute: If an instrument lacks a referenced attribute
            ExpressionSyntaxError: If an expression does not parse
        """
        started = time.perf_counter()
        self.stats = EvalStats()
        watch = Stopwatch()
        calendar = self.provider.calendar()
        lo, hi = calendar.locate_range(spec.start, spec.end)
        canonicals = [parse(text).key for text in spec.expressions]

        if self.config.use_dataset_cache:
            frame = self._build_cached(spec, calendar, canonicals, lo, hi, watch)
        else:
            frame, _ = self._run_stages(spec, calendar, canonicals, lo, hi, watch)

        if self.cache_size_budget_bytes is not None:
            CacheManager(self.cache_dir).enforce_budget(self.cache_size_budget_bytes)

        timings = StageTimings(
            **{name: watch.get(name) for name in STAGES},
            total=time.perf_counter() - started,
        )
        self.timings = timings
        logger.info(
            f"Built {len(frame)} rows x {len(frame.columns)} columns "
            f"[{self.config.label}, workers={self.config.workers}] "
            f"in {timings.total:.3f}s"
        )
        return frame, timings

    def _build_cached(
        self,
        spec: QuerySpec,
        calendar: Calendar,
        canonicals: List[str],
        lo: int,
        hi: int,
        watch: Stopwatch,
    ) -> AlignedFrame:
        key = dataset_key(canonicals, spec.pool_key, self.frequency)
        stored_columns = sorted(set(canonicals))
        stamp = self.scope_stamp(spec, calendar)
        with self.dataset_cache.locks.hold(key):
            with watch.measure("load"):
                found = self.dataset_cache.lookup(key, lo, hi, canonicals, stamp)
            if isinstance(found, Hit):
                self.stats.dataset_cache_hits += 1
                return AlignedFrame.from_rows(
                    found.value, calendar, lo, hi, labels=spec.expressions
                )

            if isinstance(found, PartialTail):
                self.stats.dataset_cache_partials += 1
                tail_lo = found.covered_hi + 1
                tail, final = self._run_stages(
                    spec, calendar, canonicals, tail_lo, hi, watch
                )
                cache_hi = min(self.cacheable_hi(spec, calendar, hi), final)
                tail_rows = self._as_rows(tail, canonicals)
                if cache_hi >= tail_lo:
                    self.dataset_cache.append(
                        key,
                        tail_rows.select(tail_lo, cache_hi, stored_columns),
                        tail_lo,
                        cache_hi,
                        len(calendar),
                        stamp,
                    )
                parts = [tail_rows.select(max(lo, tail_lo), hi, canonicals)]
                if lo <= found.covered_hi:
                    with watch.measure("load"):
                        head = self.dataset_cache.lookup(
                            key, lo, found.covered_hi, canonicals
                        )
                    if not isinstance(head, Hit):
                        raise RuntimeError(
                            f"dataset cache entry for {key!r} vanished during append"
                        )
                    parts.insert(0, head.value)
                with watch.measure("combine"):
                    rows = merge_rows(parts)
                return AlignedFrame.from_rows(
                    rows, calendar, lo, hi, labels=spec.expressions
                )

            self.stats.dataset_cache_misses += 1
            frame, final = self._run_stages(spec, calendar, canonicals, lo, hi, watch)
            cache_hi = min(self.cacheable_hi(spec, calendar, hi), final)
            if cache_hi >= lo:
                rows = self._as_rows(frame, canonicals)
                rows = rows.select(lo, cache_hi, stored_columns)
                self.dataset_cache.write(key, lo, cache_hi, rows, len(calendar), stamp)
            return frame

    @staticmethod
    def _as_rows(frame: AlignedFrame, canonicals: Sequence[str]) -> FrameRows:
        rows = frame.to_rows()
        rows.columns = list(canonicals)
        return rows

    def _run_stages(
        self,
        spec: QuerySpec,
        calendar: Calendar,
        canonicals: List[str],
        lo: int,
        hi: int,
        watch: Stopwatch,
    ) -> Tuple[AlignedFrame, int]:
        """
        Run every stage over ``[lo, hi]``.

        Returns:
            (frame, last index up to which every row is final)
        """
        membership = self.resolve_scope(spec, lo, hi)
        distinct = sorted(set(canonicals))
        tasks = []
        for symbol in sorted(membership):
            intervals = membership[symbol]
            if not intervals:
                continue
            tasks.append(
                InstrumentTask(
                    instrument=symbol,
                    expressions=distinct,
                    lo=min(a for a, _ in intervals),
                    hi=max(b for _, b in intervals),
                    provider=self.provider,
                    cache_dir=self.cache_dir if self.config.use_expr_cache else None,
                    frequency=self.frequency,
                    version=len(calendar),
                    memo_capacity=self.config.memo_capacity,
                    visit_refresh_seconds=self.visit_refresh_seconds,
                )
            )

        results = self._compute(tasks, watch)
        columns = [distinct.index(c) for c in canonicals]

        with watch.measure("convert_index"):
            blocks = [
                convert_index(
                    Block(r.instrument, r.indices, r.values[:, columns]), calendar
                )
                for r in results
            ]
        with watch.measure("filter_pool"):
            blocks = [
                b.take(filter_by_pool(b.indices, membership[b.instrument]))
                for b in blocks
            ]
        final = hi
        for r in results:
            if len(r.indices) and r.final_hi < r.indices[-1]:
                final = min(final, r.final_hi)
        with watch.measure("combine"):
            return combine(blocks, spec.expressions, lo, hi), final

    def _compute(
        self, tasks: List[InstrumentTask], watch: Stopwatch
    ) -> List[InstrumentResult]:
        started = time.perf_counter()
        if self.config.workers == 1 or len(tasks) <= 1:
            results = [compute_instrument(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=self.config.workers) as executor:
                results = list(executor.map(compute_instrument, tasks))
        wall = time.perf_counter() - started

        load = sum(r.load_seconds for r in results)
        compute = sum(r.compute_seconds for r in results)
        if self.config.workers > 1 and load + compute > 0:
            # Parallel work overlaps: split the wall time in proportion.
            busy = load + compute
            load, compute = wall * load / busy, wall * compute / busy
        watch.add("load", load)
        watch.add("compute", compute)
        for r in results:
            self.stats.merge(r.stats)
        return results


def build_dataset(
    spec: QuerySpec,
    config: Optional[BuildConfig] = None,
    root: Optional[Path] = None,
    provider: Optional[SeriesProvider] = None,
) -> Tuple[AlignedFrame, StageTimings]:
    """
    Build one query with a fresh builder.

    Args:
        spec: The query
        config: Cache and parallelism switches
        root: Store root; defaults to the configured root
        provider: Optional series source override

    Returns:
        (frame, timings)
    """
    if root is None:
        root = get_settings().root
    return DatasetBuilder(root, config, provider=provider).build(spec)
