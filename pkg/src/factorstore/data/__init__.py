"""Flat-file storage layer.

Calendars, instrument pools and per-instrument attribute series live in a
plain directory tree; providers expose the series to computation.
"""

from factorstore.data.calendar import Calendar
from factorstore.data.ingest import ingest_csv
from factorstore.data.pools import InstrumentPool
from factorstore.data.provider import CountingProvider
from factorstore.data.provider import SeriesProvider
from factorstore.data.provider import StoreProvider
from factorstore.data.store import FeatureStore

__all__ = [
    "Calendar",
    "CountingProvider",
    "FeatureStore",
    "InstrumentPool",
    "SeriesProvider",
    "StoreProvider",
    "ingest_csv",
]
