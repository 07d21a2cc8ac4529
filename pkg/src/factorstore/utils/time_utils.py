"""Date parsing, timing statistics and stage stopwatches."""

import time
from contextlib import contextmanager
from datetime import date
from datetime import datetime
from typing import Dict
from typing import Iterator
from typing import Sequence
from typing import Tuple

import numpy as np


def parse_date(text: str) -> date:
    """
    Parse an ISO-8601 calendar date.

    Args:
        text: Date string (e.g. '2007-01-04'); a time part is ignored

    Returns:
        Parsed date

    Raises:
        ValueError: If the text is not an ISO date
    """
    value = text.strip()
    try:
        return date.fromisoformat(value[:10])
    except ValueError:
        raise ValueError(f"Invalid date: {text!r} (expected YYYY-MM-DD)") from None


def format_datetime(dt: datetime) -> str:
    """Format a timestamp for tables and logs."""
    return dt.strftime("%Y-%m-%d %H:%M:%S")


def mean_std(samples: Sequence[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation; the deviation of one sample is 0."""
    values = np.asarray(samples, dtype=np.float64)
    if len(values) == 0:
        return 0.0, 0.0
    if len(values) == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1))


class Stopwatch:
    """Accumulates monotonic-clock seconds per named stage."""

    def __init__(self):
        self.elapsed: Dict[str, float] = {}

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.add(stage, time.perf_counter() - start)

    def add(self, stage: str, seconds: float) -> None:
        self.elapsed[stage] = self.elapsed.get(stage, 0.0) + max(seconds, 0.0)

    def get(self, stage: str) -> float:
        return self.elapsed.get(stage, 0.0)
