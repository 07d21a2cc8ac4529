"""Tests for the staged dataset builder."""

from datetime import date
from datetime import timedelta

import numpy as np
import pytest

from factorstore.cache import CacheManager
from factorstore.core.exceptions import EmptyRange
from factorstore.core.exceptions import MissingPool
from factorstore.core.exceptions import UnknownAttribute
from factorstore.core.models import STAGES
from factorstore.core.models import BuildConfig
from factorstore.core.models import QuerySpec
from factorstore.core.settings import Settings
from factorstore.data.ingest import ingest_csv
from factorstore.data.pools import InstrumentPool
from factorstore.data.store import FeatureStore
from factorstore.dataset import DatasetBuilder
from factorstore.dataset import build_dataset


EXPRESSIONS = [
    "$close",
    "Mean($close, 5)",
    "Std($close, 5)/$close",
    "$close/Ref($close, 1)-1",
    "($high-$low)/$open",
]

CONFIGS = [
    BuildConfig(use_expr_cache=False, use_dataset_cache=False),
    BuildConfig(use_expr_cache=True, use_dataset_cache=False),
    BuildConfig(use_expr_cache=False, use_dataset_cache=True),
    BuildConfig(use_expr_cache=True, use_dataset_cache=True),
]


def pool_query(dates, pool="small", expressions=EXPRESSIONS, start=0, end=-1):
    return QuerySpec(
        pool=pool, expressions=expressions, start=dates[start], end=dates[end]
    )


def build(root, spec, config=None):
    builder = DatasetBuilder(root, config or BuildConfig())
    frame, _ = builder.build(spec)
    return frame, builder


class TestBuild:
    """Test frame content and scope handling."""

    def test_pool_rows(self, store, dates):
        """Only rows inside pool membership are kept, in symbol then date order."""
        frame, _ = build(store.root, pool_query(dates))

        keys = frame.row_keys()
        assert len(frame) == 30 + 10 + 10
        assert keys[:2] == [("AAA", 0), ("AAA", 1)]
        assert keys[30] == ("BBB", 0) and keys[39] == ("BBB", 9)
        assert keys[40] == ("CCC", 20) and keys[-1] == ("CCC", 29)
        assert frame.columns == EXPRESSIONS

    def test_raw_column_matches_store(self, store, dates):
        """A bare attribute column reproduces the stored values."""
        frame, _ = build(store.root, pool_query(dates))
        expected = store.read_series("BBB", "close", None, 0, 9)
        np.testing.assert_array_equal(frame.values[30:40, 0], expected)

    def test_rolling_history_before_range(self, store, dates):
        """Windows read history before the query start even outside the range."""
        spec = pool_query(dates, pool="all", expressions=["Mean($close, 5)"], start=10)
        frame, _ = build(store.root, spec, CONFIGS[0])

        closes = store.read_series("AAA", "close", None, 6, 10).astype(np.float64)
        assert frame.values[0, 0] == pytest.approx(closes.mean(), rel=1e-6)

    def test_instrument_scope(self, store, dates):
        """An explicit instrument list covers the whole range."""
        spec = QuerySpec(
            instruments=["bbb", "AAA"],
            expressions=["$close"],
            start=dates[0],
            end=dates[-1],
        )
        frame, _ = build(store.root, spec)
        assert frame.symbols() == ["AAA", "BBB"]
        assert len(frame) == 60

    def test_duplicate_expressions(self, store, dates):
        """Repeated expressions yield repeated columns."""
        spec = pool_query(dates, expressions=["$close", "$CLOSE"])
        frame, _ = build(store.root, spec)
        np.testing.assert_array_equal(frame.values[:, 0], frame.values[:, 1])
        assert frame.columns == ["$close", "$CLOSE"]

    def test_empty_range(self, store):
        """A weekend-only range has no calendar points."""
        saturday, sunday = date(2020, 1, 4), date(2020, 1, 5)
        spec = QuerySpec(
            pool="small", expressions=["$close"], start=saturday, end=sunday
        )
        with pytest.raises(EmptyRange):
            build(store.root, spec)

    def test_missing_pool(self, store, dates):
        """Unknown pools are reported."""
        with pytest.raises(MissingPool):
            build(store.root, pool_query(dates, pool="nope"), CONFIGS[0])

    def test_unknown_attribute(self, store, dates):
        """Attributes absent from the store are reported."""
        with pytest.raises(UnknownAttribute):
            build(store.root, pool_query(dates, expressions=["$vwap"]), CONFIGS[0])

    def test_timings(self, store, dates):
        """Stage timings are non-negative and bounded by the total."""
        _, timings = DatasetBuilder(store.root, CONFIGS[0]).build(pool_query(dates))
        stages = timings.stages()
        assert set(stages) == set(STAGES)
        assert all(v >= 0 for v in stages.values())
        assert timings.total >= max(stages.values())

    def test_build_dataset_function(self, store, dates):
        """The one-shot helper builds with a fresh builder."""
        frame, _ = build_dataset(pool_query(dates), CONFIGS[0], root=store.root)
        assert len(frame) == 50

    def test_from_settings(self, store):
        """Settings switches become the build config."""
        settings = Settings(root=store.root, use_dataset_cache=False, workers=2)
        builder = DatasetBuilder.from_settings(settings)
        assert builder.config.label == "+E -D"
        assert builder.config.workers == 2


class TestConfigurationInvariance:
    """Cache switches and worker counts never change results."""

    @pytest.mark.parametrize("workers", [1, 2])
    @pytest.mark.parametrize("config", CONFIGS, ids=lambda c: c.label)
    def test_cold_and_warm_match_baseline(self, store, dates, config, workers):
        """Cold and warm builds equal an uncached single-worker build."""
        spec = pool_query(dates)
        baseline, _ = build(store.root, spec, CONFIGS[0])
        CacheManager(store.root / "cache").clear()

        config = config.model_copy(update={"workers": workers})
        cold, _ = build(store.root, spec, config)
        warm, _ = build(store.root, spec, config)

        assert cold.digest() == baseline.digest()
        assert warm.digest() == baseline.digest()

    def test_sub_range_of_cached_entry(self, store, dates):
        """A narrower query is served from a wider cached entry."""
        build(store.root, pool_query(dates))
        narrow = pool_query(dates, start=5, end=15)

        cached, builder = build(store.root, narrow)
        fresh, _ = build(store.root, narrow, CONFIGS[0])

        assert builder.stats.dataset_cache_hits == 1
        assert cached.digest() == fresh.digest()


class TestCacheEffects:
    """Test what warm caches save."""

    def test_warm_dataset_cache_evaluates_nothing(self, store, dates):
        """A dataset-cache hit skips every stage."""
        spec = pool_query(dates)
        build(store.root, spec)
        _, builder = build(store.root, spec)

        assert builder.stats.dataset_cache_hits == 1
        assert builder.stats.node_evaluations == 0
        assert builder.stats.raw_reads == 0

    def test_warm_expression_cache_evaluates_nothing(self, store, dates):
        """Expression-cache hits replace evaluation per (expression, instrument)."""
        spec = pool_query(dates)
        config = CONFIGS[1]
        build(store.root, spec, config)
        _, builder = build(store.root, spec, config)

        assert builder.stats.expr_cache_hits == 3 * len(EXPRESSIONS)
        assert builder.stats.expr_cache_misses == 0
        assert builder.stats.node_evaluations == 0

    def test_cold_build_counts_misses(self, store, dates):
        """A cold cached build records misses for both caches."""
        _, builder = build(store.root, pool_query(dates))
        assert builder.stats.dataset_cache_misses == 1
        assert builder.stats.expr_cache_misses == 3 * len(EXPRESSIONS)
        assert builder.stats.node_evaluations > 0

    def test_cache_stops_at_pool_last_date(self, store, dates):
        """Rows after the pool's last recorded date are never cached."""
        store.write_pool(
            InstrumentPool(name="early", memberships={"AAA": [(dates[0], dates[9])]})
        )
        spec = pool_query(dates, pool="early", expressions=["$close"])
        first, _ = build(store.root, spec)

        entries = CacheManager(store.root / "cache").list_entries("dataset")
        assert [(e.first, e.last) for e in entries] == [(0, 9)]

        again, builder = build(store.root, spec)
        assert builder.stats.dataset_cache_partials == 1
        assert again.digest() == first.digest()

    def test_budget_is_enforced(self, store, dates):
        """A zero budget evicts everything after the build."""
        builder = DatasetBuilder(store.root, BuildConfig(), cache_size_budget_bytes=0)
        builder.build(pool_query(dates))
        assert CacheManager(store.root / "cache").list_entries() == []


class TestAppend:
    """Extending the calendar and series keeps warm and cold results equal."""

    @pytest.fixture
    def growing(self, tmp_path, dates):
        """A store holding the first 20 of 30 days."""
        store = FeatureStore(tmp_path / "growing")
        store.init_layout()
        store.write_calendar("day", dates[:20])
        rng = np.random.default_rng(3)
        full = {
            (symbol, attribute): rng.uniform(10, 20, 30).astype(np.float32)
            for symbol in ("AAA", "BBB")
            for attribute in ("close", "open")
        }
        for (symbol, attribute), values in full.items():
            store.write_series(symbol, attribute, None, 0, values[:20])
        store.write_pool(
            InstrumentPool(
                name="p",
                memberships={
                    "AAA": [(dates[0], dates[19])],
                    "BBB": [(dates[5], dates[19])],
                },
            )
        )
        return store, full

    def extend(self, store, full, dates):
        store.write_calendar("day", dates)
        for (symbol, attribute), values in full.items():
            store.append_series(symbol, attribute, None, values[20:])
        store.write_pool(
            InstrumentPool(
                name="p",
                memberships={
                    "AAA": [(dates[0], dates[29])],
                    "BBB": [(dates[5], dates[29])],
                },
            )
        )

    @pytest.mark.parametrize("config", CONFIGS[1:], ids=lambda c: c.label)
    def test_warm_equals_cold_after_append(self, growing, dates, config):
        """Caches filled before an append produce the cold result afterwards."""
        store, full = growing
        expressions = ["Mean($close, 3)", "$close/Ref($open, 2)", "Std($open, 4)"]
        before = pool_query(dates[:20], pool="p", expressions=expressions)
        build(store.root, before, config)

        self.extend(store, full, dates)
        spec = pool_query(dates, pool="p", expressions=expressions)
        warm, builder = build(store.root, spec, config)
        cold, _ = build(store.root, spec, CONFIGS[0])

        assert warm.digest() == cold.digest(), cold.first_difference(warm)
        if config.use_dataset_cache:
            assert builder.stats.dataset_cache_partials == 1
        else:
            assert builder.stats.expr_cache_partials == 2 * len(expressions)


class TestPoolFilterOracle:
    """Built rows match a direct membership check on dates."""

    def test_random_memberships(self, store, dates):
        """Two hundred random pools and ranges, including weekend boundaries."""
        rng = np.random.default_rng(17)
        calendar = store.read_calendar()
        builder = DatasetBuilder(store.root, CONFIGS[0])
        origin = dates[0] - timedelta(days=3)

        for case in range(200):
            memberships = {}
            for symbol in ("AAA", "BBB", "CCC"):
                count = int(rng.integers(0, 3))
                offsets = sorted(rng.choice(48, size=2 * count, replace=False).tolist())
                spans = [
                    (origin + timedelta(days=a), origin + timedelta(days=b))
                    for a, b in zip(offsets[::2], offsets[1::2])
                ]
                if spans:
                    memberships[symbol] = spans
            store.write_pool(InstrumentPool(name="rand", memberships=memberships))
            lo, hi = sorted(int(x) for x in rng.integers(0, 30, size=2))
            spec = QuerySpec(
                pool="rand", expressions=["$close"], start=dates[lo], end=dates[hi]
            )

            frame, _ = builder.build(spec)

            expected = [
                (symbol, t)
                for symbol in sorted(memberships)
                for t in range(lo, hi + 1)
                if any(a <= calendar.date_at(t) <= b for a, b in memberships[symbol])
            ]
            assert frame.row_keys() == expected, f"case {case}: {memberships}"


class TestLaggingSeries:
    """A series that ends before the calendar is never cached past its tail."""

    @pytest.fixture
    def lagging(self, tmp_path, dates):
        """Six calendar days; AAA close stops after day 3, BBB close is complete."""
        store = FeatureStore(tmp_path / "lagging")
        store.init_layout()
        store.write_calendar("day", dates[:6])
        full = np.arange(1, 7, dtype=np.float32)
        store.write_series("AAA", "close", None, 0, full[:4])
        store.write_series("BBB", "close", None, 0, full * 10)
        return store, full

    @pytest.mark.parametrize("config", CONFIGS[1:], ids=lambda c: c.label)
    def test_warm_equals_cold_after_late_values(self, lagging, dates, config):
        """Values arriving for the lagging days replace the NaN seen before."""
        store, full = lagging
        spec = QuerySpec(
            instruments=["AAA", "BBB"],
            expressions=["$close", "Mean($close, 2)"],
            start=dates[0],
            end=dates[5],
        )
        before, _ = build(store.root, spec, config)
        assert np.isnan(before.values[4:6, 0]).all()

        store.append_series("AAA", "close", None, full[4:])
        warm, _ = build(store.root, spec, config)
        cold, _ = build(store.root, spec, CONFIGS[0])

        assert warm.digest() == cold.digest(), cold.first_difference(warm)
        np.testing.assert_array_equal(warm.values[4:6, 0], [5.0, 6.0])

    def test_expression_entries_stop_at_the_tail(self, lagging, dates):
        """Expression-cache entries of the lagging instrument end at its last value."""
        store, _ = lagging
        spec = QuerySpec(
            instruments=["AAA", "BBB"],
            expressions=["$close"],
            start=dates[0],
            end=dates[5],
        )
        build(store.root, spec, CONFIGS[1])

        entries = CacheManager(store.root / "cache").list_entries("expr")
        spans = {e.key.split("|")[1]: (e.first, e.last) for e in entries}
        assert spans == {"AAA": (0, 3), "BBB": (0, 5)}

    def test_dataset_entry_stops_at_the_tail(self, lagging, dates):
        """The dataset-cache entry covers only rows that are final everywhere."""
        store, _ = lagging
        spec = QuerySpec(
            instruments=["AAA", "BBB"],
            expressions=["$close"],
            start=dates[0],
            end=dates[5],
        )
        build(store.root, spec, CONFIGS[2])

        entries = CacheManager(store.root / "cache").list_entries("dataset")
        assert [(e.first, e.last) for e in entries] == [(0, 3)]


class TestMembershipChanges:
    """Pool membership added over cached dates invalidates dataset entries."""

    def ingest(self, tmp_path, store, symbol, dates, name):
        lines = [
            f"{symbol},{d.isoformat()},1,2,0.5,{k + 1},100"
            for k, d in enumerate(dates)
        ]
        path = tmp_path / name
        path.write_text(
            "symbol,date,open,high,low,close,volume\n" + "\n".join(lines) + "\n",
            encoding="utf-8",
        )
        ingest_csv(store, path)

    def test_new_instrument_in_all_pool(self, tmp_path, dates):
        """A symbol ingested over already cached dates appears in the warm build."""
        store = FeatureStore(tmp_path / "store")
        store.init_layout()
        store.write_calendar("day", dates)
        self.ingest(tmp_path, store, "AAA", dates[:6], "aaa.csv")
        spec = pool_query(dates, pool="all", expressions=["$close"], end=5)
        first, _ = build(store.root, spec, CONFIGS[3])
        assert len(first) == 6

        self.ingest(tmp_path, store, "BBB", dates[:6], "bbb.csv")
        warm, builder = build(store.root, spec, CONFIGS[3])
        cold, _ = build(store.root, spec, CONFIGS[0])

        assert len(cold) == 12
        assert warm.digest() == cold.digest(), cold.first_difference(warm)
        assert builder.stats.dataset_cache_misses == 1

    def test_unchanged_pool_still_hits(self, store, dates):
        """Rewriting a pool with the same membership keeps the entry usable."""
        spec = pool_query(dates, pool="small", expressions=["$close"])
        build(store.root, spec)
        store.write_pool(store.read_pool("small"))

        _, builder = build(store.root, spec)
        assert builder.stats.dataset_cache_hits == 1
