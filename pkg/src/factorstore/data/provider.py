"""Abstract read interface that expression evaluation and dataset building use.

Providers decouple computation from where values live: the file store serves
the raw series, and wrappers can observe or redirect reads.
"""

from abc import ABC
from abc import abstractmethod
from pathlib import Path

import numpy as np

from factorstore.data.calendar import Calendar
from factorstore.data.store import FeatureStore


class SeriesProvider(ABC):
    """Abstract base class for series providers.

    Implementations must be safe for concurrent reads and, when used with a
    process pool, picklable.
    """

    @abstractmethod
    def calendar(self) -> Calendar:
        """Return the calendar every served series is aligned against."""
        pass

    @abstractmethod
    def read_series(
        self, instrument: str, attribute: str, lo: int, hi: int
    ) -> np.ndarray:
        """Read calendar indices ``[lo, hi]`` of one series.

        Args:
            instrument: Instrument symbol
            attribute: Raw attribute name (e.g. ``close``)
            lo: First calendar index, ``0 <= lo``
            hi: Last calendar index, ``lo <= hi < len(calendar)``

        Returns:
            np.ndarray: float32 values, NaN where nothing is stored

        Raises:
            MissingSeries: If the series does not exist
        """
        pass

    @abstractmethod
    def series_tail(self, instrument: str, attribute: str) -> int:
        """Last calendar index holding a stored value; ``start - 1`` when empty.

        Values up to the tail never change; later positions read as NaN until
        an append reaches them.

        Raises:
            MissingSeries: If the series does not exist
        """
        pass

    @abstractmethod
    def has_series(self, instrument: str, attribute: str) -> bool:
        """Whether one instrument/attribute series exists."""
        pass

    @abstractmethod
    def has_instrument(self, instrument: str) -> bool:
        """Whether the provider knows the instrument at all."""
        pass

    @property
    def frequency(self) -> str:
        """Frequency of the served series."""
        return self.calendar().frequency

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(frequency='{self.frequency}')"


class StoreProvider(SeriesProvider):
    """Provider backed by a :class:`FeatureStore`.

    Holds only the root path and frequency, so it pickles cheaply into worker
    processes; each process opens its own store.
    """

    def __init__(self, root: Path, frequency: str = "day"):
        self.root = Path(root)
        self._frequency = frequency
        self._store = None

    @property
    def store(self) -> FeatureStore:
        """Lazily opened store."""
        if self._store is None:
            self._store = FeatureStore(self.root, self._frequency)
        return self._store

    @property
    def frequency(self) -> str:
        return self._frequency

    def calendar(self) -> Calendar:
        return self.store.read_calendar(self._frequency)

    def read_series(
        self, instrument: str, attribute: str, lo: int, hi: int
    ) -> np.ndarray:
        return self.store.read_series(instrument, attribute, self._frequency, lo, hi)

    def series_tail(self, instrument: str, attribute: str) -> int:
        frequency = self._frequency
        start, length = self.store.series_extent(instrument, attribute, frequency)
        return start + length - 1

    def has_series(self, instrument: str, attribute: str) -> bool:
        return self.store.has_series(instrument, attribute, self._frequency)

    def has_instrument(self, instrument: str) -> bool:
        return self.store.has_instrument(instrument)

    def __getstate__(self) -> dict:
        return {"root": self.root, "_frequency": self._frequency, "_store": None}


class CountingProvider(SeriesProvider):
    """Wrapper counting the reads that reach an inner provider."""

    def __init__(self, inner: SeriesProvider):
        self.inner = inner
        self.reads = 0

    @property
    def frequency(self) -> str:
        return self.inner.frequency

    def calendar(self) -> Calendar:
        return self.inner.calendar()

    def read_series(
        self, instrument: str, attribute: str, lo: int, hi: int
    ) -> np.ndarray:
        self.reads += 1
        return self.inner.read_series(instrument, attribute, lo, hi)

    def series_tail(self, instrument: str, attribute: str) -> int:
        return self.inner.series_tail(instrument, attribute)

    def has_series(self, instrument: str, attribute: str) -> bool:
        return self.inner.has_series(instrument, attribute)

    def has_instrument(self, instrument: str) -> bool:
        return self.inner.has_instrument(instrument)
