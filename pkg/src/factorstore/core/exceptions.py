"""Exception hierarchy for factorstore.

Every error carries an ``exit_code`` so the CLI can map failures onto its
exit contract (1 = environment/data error, 2 = usage/parse error) in one place.
"""

from typing import Optional


class FactorStoreError(Exception):
    """Base class for all factorstore errors."""

    exit_code: int = 1


# Storage


class StorageError(FactorStoreError):
    """Errors raised by the flat-file store."""


class MissingCalendar(StorageError):
    """No calendar file exists for the requested frequency."""


class NonMonotonicCalendar(StorageError):
    """Calendar timestamps are not strictly increasing."""


class PrefixMismatch(StorageError):
    """The stored calendar is not a prefix of the calendar being written."""


class OutOfRange(StorageError):
    """A timestamp cannot be rounded onto the calendar."""


class IndexBeyondCalendar(StorageError):
    """A series would extend past the end of the calendar."""


class MissingSeries(StorageError):
    """The requested instrument/attribute series does not exist."""


class MissingPool(StorageError):
    """The requested instrument pool does not exist."""


class NonMonotonicUpdate(StorageError):
    """A pool update is not later than the dates already recorded."""


class MalformedFile(StorageError):
    """A calendar or pool file cannot be parsed."""


# Expressions


class ExpressionError(FactorStoreError):
    """Errors raised while parsing or evaluating expressions."""

    exit_code = 2


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression text."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownFunction(ExpressionSyntaxError):
    """Function name not in the operator vocabulary."""


class ArityError(ExpressionSyntaxError):
    """Wrong number of arguments for a function."""


class NonIntegerWindow(ExpressionSyntaxError):
    """Rolling window or shift is not a valid integer literal."""


class UnknownAttribute(ExpressionError):
    """An expression references an attribute the instrument does not have."""

    exit_code = 1


# Caches


class CacheError(FactorStoreError):
    """Errors raised by the disk caches."""


class CorruptEntry(CacheError):
    """A cache entry failed validation."""


class NonContiguousAppend(CacheError):
    """An append does not start right after the covered tail."""


# Dataset


class DatasetError(FactorStoreError):
    """Errors raised by the dataset builder."""


class EmptyRange(DatasetError):
    """No calendar points fall in the requested date range."""


# Sampling


class SamplingError(FactorStoreError):
    """Errors raised by the hyperparameter sampler."""


class DegenerateAcceptance(SamplingError):
    """Rejection sampler acceptance rate is pathologically low."""


# Benchmark


class BenchmarkError(FactorStoreError):
    """Errors raised by the benchmark harness."""


class NonEmptyTarget(BenchmarkError):
    """Synthetic data generation target directory is not empty."""


class DigestMismatch(BenchmarkError):
    """Benchmark configurations produced different frames."""

    def __init__(self, message: str, first_difference: Optional[str] = None):
        self.first_difference = first_difference
        if first_difference:
            message = f"{message}; first differing row: {first_difference}"
        super().__init__(message)


# Ingestion


class IngestError(FactorStoreError):
    """Errors raised while ingesting CSV data."""


class UnknownDates(IngestError):
    """Rows reference dates that are not on the calendar."""

    def __init__(self, dates):
        self.dates = list(dates)
        shown = ", ".join(str(d) for d in self.dates[:10])
        more = f" (+{len(self.dates) - 10} more)" if len(self.dates) > 10 else ""
        super().__init__(f"dates not in calendar: {shown}{more}")


class HistoryConflict(IngestError):
    """Ingestion would rewrite or prepend to immutable history."""
