"""Deterministic synthetic OHLCV universe for benchmarks and tests."""

import logging
from pathlib import Path
from typing import Dict
from typing import List

import numpy as np
import pandas as pd

from factorstore.bench.models import POOL_NAME
from factorstore.bench.models import BenchConfig
from factorstore.core.exceptions import NonEmptyTarget
from factorstore.data.ingest import ALL_POOL
from factorstore.data.pools import InstrumentPool
from factorstore.data.store import FeatureStore


logger = logging.getLogger(__name__)

ATTRIBUTES = ("open", "high", "low", "close", "volume")
MAX_STEP = 0.05


def symbol_name(k: int) -> str:
    return f"INST{k:04d}"


def random_walk_bars(rng: np.random.Generator, days: int) -> Dict[str, np.ndarray]:
    """
    One instrument's bars.

    Closes follow ``close[t+1] = close[t] * exp(eps)`` with ``eps`` uniform in
    ``[-0.05, 0.05]``; opens gap slightly from the previous close, and
    ``low <= min(open, close) <= max(open, close) <= high`` holds on every bar.
    """
    close0 = rng.uniform(10.0, 100.0)
    steps = rng.uniform(-MAX_STEP, MAX_STEP, days - 1)
    close = close0 * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
    previous = np.concatenate([[close0], close[:-1]])
    open_ = previous * np.exp(rng.uniform(-0.01, 0.01, days))
    high = np.maximum(open_, close) * np.exp(rng.uniform(0.0, 0.02, days))
    low = np.minimum(open_, close) * np.exp(-rng.uniform(0.0, 0.02, days))
    volume = np.round(rng.uniform(1e5, 1e6, days))
    return {
        "open": open_.astype(np.float32),
        "high": high.astype(np.float32),
        "low": low.astype(np.float32),
        "close": close.astype(np.float32),
        "volume": volume.astype(np.float32),
    }


def rotating_pool(
    symbols: List[str], dates: List, pool_size: int, rng: np.random.Generator
) -> InstrumentPool:
    """
    Pool whose members on day ``t`` are a window of ``pool_size`` symbols
    sliding one step per day over a seeded permutation. With ``pool_size`` below
    ``len(symbols)`` consecutive days always differ.
    """
    order = [symbols[k] for k in rng.permutation(len(symbols))]
    pool = InstrumentPool(name=POOL_NAME)
    n = len(order)
    for t, day in enumerate(dates):
        pool.append(day, (order[(t + j) % n] for j in range(pool_size)))
    return pool


def raw_payload_bytes(config: BenchConfig) -> int:
    """Bytes of the generated values alone, 4 per value."""
    return config.instruments * len(ATTRIBUTES) * config.days * 4


def generate_synthetic(
    config: BenchConfig, root: Path, frequency: str = "day"
) -> FeatureStore:
    """
    Populate an empty directory with a synthetic store.

    Writes a business-day calendar, OHLCV series for ``config.instruments``
    symbols, the rotating ``bench`` pool and the ``all`` pool.

    Raises:
        NonEmptyTarget: If ``root`` exists and is not empty
    """
    root = Path(root)
    if root.exists() and any(root.iterdir()):
        raise NonEmptyTarget(f"{root} is not empty")

    rng = np.random.default_rng(config.seed)
    dates = [ts.date() for ts in pd.bdate_range(config.start, periods=config.days)]
    symbols = [symbol_name(k) for k in range(config.instruments)]

    store = FeatureStore(root, frequency)
    store.init_layout()
    store.write_calendar(frequency, dates)
    for symbol in symbols:
        for attribute, values in random_walk_bars(rng, config.days).items():
            store.write_series(symbol, attribute, frequency, 0, values)

    store.write_pool(rotating_pool(symbols, dates, config.pool_size, rng))
    span = [(dates[0], dates[-1])]
    store.write_pool(
        InstrumentPool(name=ALL_POOL, memberships={s: list(span) for s in symbols})
    )
    logger.info(
        f"Generated {config.instruments} instruments x {config.days} days under {root}"
    )
    return store
