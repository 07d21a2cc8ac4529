"""Shared fixtures: small calendars and tmp_path-backed stores."""

from datetime import date
from typing import Dict
from typing import List

import numpy as np
import pandas as pd
import pytest

from factorstore.bench.models import BenchConfig
from factorstore.bench.synthetic import generate_synthetic
from factorstore.core.exceptions import MissingSeries
from factorstore.data.calendar import Calendar
from factorstore.data.pools import InstrumentPool
from factorstore.data.provider import SeriesProvider
from factorstore.data.store import FeatureStore


SYMBOLS = ("AAA", "BBB", "CCC")
ATTRIBUTES = ("open", "high", "low", "close", "volume")


def business_days(start: str, periods: int) -> List[date]:
    """Business-day dates starting at ``start``."""
    return [ts.date() for ts in pd.bdate_range(start, periods=periods)]


@pytest.fixture
def dates():
    """Thirty business days starting on a Thursday."""
    return business_days("2020-01-02", 30)


@pytest.fixture
def store(tmp_path, dates):
    """Store with three instruments, full OHLCV history and two pools.

    Pool ``small`` holds AAA throughout, BBB for the first ten days and CCC
    from day 20 on.
    """
    s = FeatureStore(tmp_path / "store")
    s.init_layout()
    s.write_calendar("day", dates)
    rng = np.random.default_rng(42)
    for symbol in SYMBOLS:
        close = 50.0 * np.exp(np.cumsum(rng.uniform(-0.05, 0.05, len(dates))))
        bars = {
            "open": close * 0.99,
            "high": close * 1.02,
            "low": close * 0.97,
            "close": close,
            "volume": rng.uniform(1e5, 1e6, len(dates)),
        }
        for attribute in ATTRIBUTES:
            values = bars[attribute].astype(np.float32)
            s.write_series(symbol, attribute, "day", 0, values)
    s.write_pool(
        InstrumentPool(
            name="small",
            memberships={
                "AAA": [(dates[0], dates[-1])],
                "BBB": [(dates[0], dates[9])],
                "CCC": [(dates[20], dates[-1])],
            },
        )
    )
    s.write_pool(
        InstrumentPool(
            name="all", memberships={k: [(dates[0], dates[-1])] for k in SYMBOLS}
        )
    )
    return s


@pytest.fixture
def tiny_bench_config():
    """Benchmark config small enough for unit tests."""
    return BenchConfig(instruments=6, days=40, pool_size=4, seed=7, repeat=1)


@pytest.fixture
def synthetic_store(tmp_path, tiny_bench_config):
    """Generated synthetic store."""
    return generate_synthetic(tiny_bench_config, tmp_path / "synthetic")


class ArrayProvider(SeriesProvider):
    """In-memory provider over ``{instrument: {attribute: values}}``."""

    def __init__(self, data: Dict[str, Dict[str, np.ndarray]], length: int):
        self.data = {
            symbol.upper(): {
                k: np.asarray(v, dtype=np.float32) for k, v in attrs.items()
            }
            for symbol, attrs in data.items()
        }
        self._calendar = Calendar(timestamps=business_days("2015-01-01", length))

    def calendar(self) -> Calendar:
        return self._calendar

    def read_series(
        self, instrument: str, attribute: str, lo: int, hi: int
    ) -> np.ndarray:
        try:
            values = self.data[instrument][attribute]
        except KeyError:
            raise MissingSeries(f"no series {instrument}/{attribute}") from None
        out = np.full(hi - lo + 1, np.nan, dtype=np.float32)
        stop = min(hi + 1, len(values))
        if stop > lo:
            out[: stop - lo] = values[lo:stop]
        return out

    def series_tail(self, instrument: str, attribute: str) -> int:
        try:
            return len(self.data[instrument][attribute]) - 1
        except KeyError:
            raise MissingSeries(f"no series {instrument}/{attribute}") from None

    def has_series(self, instrument: str, attribute: str) -> bool:
        return attribute in self.data.get(instrument, {})

    def has_instrument(self, instrument: str) -> bool:
        return instrument in self.data


@pytest.fixture
def array_provider():
    """Factory for in-memory providers."""

    def make(data: Dict[str, Dict[str, np.ndarray]], length: int) -> ArrayProvider:
        return ArrayProvider(data, length)

    return make
