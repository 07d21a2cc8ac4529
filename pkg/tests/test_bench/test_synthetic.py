"""Tests for the synthetic OHLCV universe."""

import numpy as np
import pytest
from pydantic import ValidationError

from factorstore.bench import BenchConfig
from factorstore.bench import generate_synthetic
from factorstore.bench.models import POOL_NAME
from factorstore.bench.synthetic import ATTRIBUTES
from factorstore.bench.synthetic import raw_payload_bytes
from factorstore.core.exceptions import ExpressionError
from factorstore.core.exceptions import NonEmptyTarget


def snapshot(root):
    return {
        path.relative_to(root).as_posix(): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


class TestGenerateSynthetic:
    """Test layout, determinism and bar invariants."""

    def test_layout(self, synthetic_store, tiny_bench_config):
        """Every instrument gets every attribute over the whole calendar."""
        calendar = synthetic_store.read_calendar()
        assert len(calendar) == tiny_bench_config.days
        assert calendar.timestamps[0].weekday() < 5
        assert synthetic_store.list_instruments() == [
            f"INST{k:04d}" for k in range(tiny_bench_config.instruments)
        ]
        for symbol in synthetic_store.list_instruments():
            assert synthetic_store.list_attributes(symbol) == sorted(ATTRIBUTES)
        assert synthetic_store.list_pools() == ["all", POOL_NAME]

    def test_same_seed_same_bytes(self, tmp_path, tiny_bench_config):
        """Two generations with one seed are byte-identical."""
        generate_synthetic(tiny_bench_config, tmp_path / "a")
        generate_synthetic(tiny_bench_config, tmp_path / "b")
        assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")

    def test_other_seed_other_bytes(self, tmp_path, tiny_bench_config):
        """A different seed changes the data."""
        generate_synthetic(tiny_bench_config, tmp_path / "a")
        other = tiny_bench_config.model_copy(update={"seed": 8})
        generate_synthetic(other, tmp_path / "b")
        assert snapshot(tmp_path / "a") != snapshot(tmp_path / "b")

    def test_bar_invariants(self, synthetic_store, tiny_bench_config):
        """Low and high bracket open and close; steps stay within five percent."""
        last = tiny_bench_config.days - 1
        for symbol in synthetic_store.list_instruments():
            bars = {
                a: synthetic_store.read_series(symbol, a, None, 0, last)
                for a in ATTRIBUTES
            }
            body_lo = np.minimum(bars["open"], bars["close"])
            body_hi = np.maximum(bars["open"], bars["close"])
            assert np.all(bars["low"] <= body_lo)
            assert np.all(body_hi <= bars["high"])
            assert np.all(bars["volume"] > 0)
            steps = np.diff(np.log(bars["close"].astype(np.float64)))
            assert np.abs(steps).max() <= 0.05 + 1e-6

    def test_rotating_membership(self, synthetic_store, tiny_bench_config):
        """The bench pool holds pool_size members and changes every day."""
        pool = synthetic_store.read_pool(POOL_NAME)
        calendar = synthetic_store.read_calendar()
        members = [pool.members_at(d) for d in calendar.timestamps]
        assert all(len(m) == tiny_bench_config.pool_size for m in members)
        assert all(a != b for a, b in zip(members, members[1:]))

    def test_all_pool_covers_everything(self, synthetic_store):
        """The all pool holds every instrument on every date."""
        pool = synthetic_store.read_pool("all")
        calendar = synthetic_store.read_calendar()
        everyone = set(synthetic_store.list_instruments())
        assert pool.members_at(calendar.timestamps[0]) == everyone
        assert pool.members_at(calendar.timestamps[-1]) == everyone

    def test_non_empty_target(self, tmp_path, tiny_bench_config):
        """Generation refuses a directory that already has content."""
        target = tmp_path / "busy"
        target.mkdir()
        (target / "notes.txt").write_text("keep", encoding="utf-8")
        with pytest.raises(NonEmptyTarget):
            generate_synthetic(tiny_bench_config, target)

    def test_compactness_inputs(self, synthetic_store, tiny_bench_config):
        """Stored feature bytes are close to the raw payload."""
        raw = raw_payload_bytes(tiny_bench_config)
        assert raw == 6 * 5 * 40 * 4
        assert raw <= synthetic_store.feature_bytes() <= 1.1 * raw + 4096


class TestBenchConfig:
    """Test benchmark configuration checks."""

    def test_defaults(self):
        """The default matrix is the desk-scale setup."""
        config = BenchConfig()
        assert (config.instruments, config.days, config.pool_size) == (100, 2500, 80)
        assert config.max_lookback == 20

    def test_workers_are_deduplicated(self):
        """Worker counts are sorted and unique."""
        assert BenchConfig(workers=[4, 1, 4]).workers == [1, 4]

    @pytest.mark.parametrize(
        "overrides",
        [
            {"instruments": 3, "pool_size": 4},
            {"instruments": 4, "pool_size": 4},
            {"days": 20},
            {"workers": [0]},
            {"expressions": []},
        ],
    )
    def test_invalid(self, overrides):
        """Impossible setups are rejected."""
        with pytest.raises((ValidationError, ValueError)):
            BenchConfig(**overrides)

    def test_bad_expression(self):
        """Expressions are parsed when the config is built."""
        with pytest.raises(ExpressionError):
            BenchConfig(expressions=["Mean($close)"])
