"""Tests for cache listing, clearing and budget eviction."""

from datetime import datetime
from datetime import timedelta

import numpy as np
import pytest

from factorstore.cache import CacheManager
from factorstore.cache import DatasetCache
from factorstore.cache import ExpressionCache
from factorstore.cache import FrameRows
from factorstore.cache import Miss
from factorstore.cache.entries import read_meta
from factorstore.cache.entries import write_meta
from factorstore.core.models import CacheEntryMeta


@pytest.fixture
def populated(tmp_path):
    """Three expression entries of growing age plus one dataset entry."""
    cache_dir = tmp_path / "cache"
    expr = ExpressionCache(cache_dir)
    ages = {"$a|AAA|day": 0, "$b|AAA|day": 1, "$c|AAA|day": 2}
    for key in ages:
        expr.write(key, 0, np.zeros(10, dtype=np.float32), version=10)
    now = datetime.now()
    for meta_path in expr.directory.glob("*.meta"):
        meta = read_meta(meta_path, CacheEntryMeta)
        visited = now - timedelta(days=ages[meta.key])
        write_meta(meta_path, meta.model_copy(update={"last_visit": visited}))
    rows = FrameRows(
        columns=["$a"],
        instruments=["AAA"],
        ordinals=np.zeros(3, dtype=np.int64),
        indices=np.arange(3, dtype=np.int64),
        values=np.ones((3, 1), dtype=np.float32),
    )
    DatasetCache(cache_dir).write("$a|pool:all|day", 0, 2, rows, version=10)
    return CacheManager(cache_dir)


class TestCacheManager:
    """Test operations over both disk caches."""

    def test_list_entries(self, populated):
        """Expression entries come first, each kind sorted by key."""
        entries = populated.list_entries()
        assert [(e.kind, e.key) for e in entries] == [
            ("expr", "$a|AAA|day"),
            ("expr", "$b|AAA|day"),
            ("expr", "$c|AAA|day"),
            ("dataset", "$a|pool:all|day"),
        ]
        assert entries[0].first == 0 and entries[0].last == 9

    def test_sizes(self, populated):
        """Entry sizes cover payload and sidecar and add up to the total."""
        entries = populated.list_entries()
        expr_entry = entries[0]
        meta_path = populated.cache_dir / "expr" / f"{expr_entry.stem}.meta"
        meta_size = meta_path.stat().st_size
        assert expr_entry.size_bytes == 4 + 10 * 4 + meta_size
        assert populated.total_bytes() == sum(e.size_bytes for e in entries)

    def test_list_one_kind(self, populated):
        """Listing can be restricted to one cache."""
        assert [e.kind for e in populated.list_entries("dataset")] == ["dataset"]

    def test_clear_one_kind(self, populated):
        """Clearing one cache leaves the other intact."""
        assert populated.clear("expr") == 3
        assert [e.kind for e in populated.list_entries()] == ["dataset"]

    def test_clear_all(self, populated):
        """Clearing everything empties both caches."""
        assert populated.clear() == 4
        assert populated.list_entries() == []
        assert populated.total_bytes() == 0

    def test_unreadable_sidecar_is_skipped(self, populated):
        """Listing tolerates a damaged sidecar."""
        broken = populated.cache_dir / "expr" / "broken.meta"
        broken.write_text("{", encoding="utf-8")
        assert len(populated.list_entries("expr")) == 3

    def test_budget_evicts_least_recently_visited(self, populated):
        """Eviction removes the stalest entries until the budget fits."""
        total = populated.total_bytes()

        evicted = populated.enforce_budget(total - 1)

        assert evicted == 1
        keys = [e.key for e in populated.list_entries("expr")]
        assert keys == ["$a|AAA|day", "$b|AAA|day"]
        assert populated.total_bytes() < total

    def test_budget_already_met(self, populated):
        """Nothing is evicted under budget."""
        assert populated.enforce_budget(populated.total_bytes()) == 0

    def test_evicted_entry_is_gone_for_readers(self, populated):
        """After eviction the cache reports a miss for the key."""
        entry = populated.list_entries("expr")[0]
        populated.evict(entry)

        cache = ExpressionCache(populated.cache_dir)
        assert isinstance(cache.lookup(entry.key, 0, 9), Miss)
        assert not list(cache.directory.glob(f"{entry.stem}.*"))
