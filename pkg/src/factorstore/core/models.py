"""Core data models for factorstore."""

from datetime import date
from datetime import datetime
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

from pydantic import BaseModel
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator


STAGES: Tuple[str, ...] = ("load", "compute", "convert_index", "filter_pool", "combine")


class QuerySpec(BaseModel):
    """A dataset query: expressions over a pool or instrument list and a date range."""

    pool: Optional[str] = None
    instruments: Optional[List[str]] = None
    expressions: List[str] = Field(min_length=1)
    start: date
    end: date
    frequency: str = "day"

    @field_validator("instruments")
    @classmethod
    def normalize_instruments(cls, v: Optional[List[str]]) -> Optional[List[str]]:
        """Upper-case and de-duplicate explicit instruments."""
        if v is None:
            return None
        return sorted({s.strip().upper() for s in v if s.strip()})

    @model_validator(mode="after")
    def check_scope(self) -> "QuerySpec":
        """Exactly one of pool/instruments, and start <= end."""
        if (self.pool is None) == (self.instruments is None):
            raise ValueError("specify exactly one of pool or instruments")
        if self.instruments is not None and not self.instruments:
            raise ValueError("instrument list is empty")
        if self.start > self.end:
            raise ValueError(f"start {self.start} is after end {self.end}")
        return self

    @property
    def pool_key(self) -> str:
        """Pool component of the dataset-cache key."""
        if self.pool is not None:
            return f"pool:{self.pool}"
        return "instruments:" + ",".join(self.instruments or [])


class BuildConfig(BaseModel):
    """Cache and parallelism switches for one dataset build."""

    use_expr_cache: bool = True
    use_dataset_cache: bool = True
    workers: int = Field(default=1, ge=1)
    memo_capacity: int = Field(default=500, ge=1)

    @property
    def label(self) -> str:
        """Configuration label in the -E/-D notation."""
        e = "+E" if self.use_expr_cache else "-E"
        d = "+D" if self.use_dataset_cache else "-D"
        return f"{e} {d}"


class StageTimings(BaseModel):
    """Wall-clock seconds spent per pipeline stage."""

    load: float = Field(default=0.0, ge=0.0)
    compute: float = Field(default=0.0, ge=0.0)
    convert_index: float = Field(default=0.0, ge=0.0)
    filter_pool: float = Field(default=0.0, ge=0.0)
    combine: float = Field(default=0.0, ge=0.0)
    total: float = Field(default=0.0, ge=0.0)

    @field_validator("*", mode="after")
    @classmethod
    def millisecond_resolution(cls, v: float) -> float:
        """Report timings at millisecond resolution."""
        return round(v, 3)

    @model_validator(mode="after")
    def check_total(self) -> "StageTimings":
        """Total is never below the largest stage."""
        largest = max(self.stages().values())
        if self.total < largest:
            self.total = largest
        return self

    def stages(self) -> Dict[str, float]:
        """Stage name to seconds, in pipeline order."""
        return {name: getattr(self, name) for name in STAGES}


class EvalStats(BaseModel):
    """Instrumented counters for one evaluation pass or build."""

    node_evaluations: int = Field(default=0, ge=0)
    raw_reads: int = Field(default=0, ge=0)
    memo_hits: int = Field(default=0, ge=0)
    memo_misses: int = Field(default=0, ge=0)
    expr_cache_hits: int = Field(default=0, ge=0)
    expr_cache_partials: int = Field(default=0, ge=0)
    expr_cache_misses: int = Field(default=0, ge=0)
    dataset_cache_hits: int = Field(default=0, ge=0)
    dataset_cache_partials: int = Field(default=0, ge=0)
    dataset_cache_misses: int = Field(default=0, ge=0)

    def merge(self, other: "EvalStats") -> None:
        """Add another set of counters into this one."""
        for name in type(self).model_fields:
            setattr(self, name, getattr(self, name) + getattr(other, name))


class CacheEntryMeta(BaseModel):
    """Metadata sidecar of an expression-cache entry."""

    key: str
    first: int = Field(ge=0)
    last: int = Field(ge=0)
    version: int = Field(ge=0, description="Calendar length at write")
    last_visit: datetime = Field(default_factory=datetime.now)

    @model_validator(mode="after")
    def check_interval(self) -> "CacheEntryMeta":
        """Covered interval is non-empty."""
        if self.last < self.first:
            raise ValueError(f"covered interval [{self.first}, {self.last}] is empty")
        return self

    @property
    def length(self) -> int:
        """Number of covered calendar points."""
        return self.last - self.first + 1


class DatasetEntryMeta(CacheEntryMeta):
    """Metadata sidecar of a dataset-cache entry."""

    columns: List[str] = Field(default_factory=list)
    instruments: List[str] = Field(default_factory=list)
    row_spans: List[Tuple[int, int]] = Field(
        default_factory=list, description="Per instrument [start_row, end_row)"
    )
    rows: int = Field(default=0, ge=0)
    generation: int = Field(
        default=0,
        ge=0,
        description="Payload files are <stem>.<generation>.frame/.index",
    )
    scope_stamp: str = Field(
        default="", description="Digest of pool membership over the covered interval"
    )
