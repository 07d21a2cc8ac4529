"""Benchmark configuration and report models."""

from datetime import date
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional
from typing import Union

import pandas as pd
from pydantic import BaseModel
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

from factorstore.core.models import STAGES
from factorstore.core.models import EvalStats
from factorstore.core.models import StageTimings
from factorstore.expr.nodes import lookback
from factorstore.expr.parser import parse


DEFAULT_EXPRESSIONS: List[str] = [
    "$close/Ref($close, 1)-1",
    "Std($close, 5)/$close",
    "(MEAN($close, 20)+2*STD($close, 20)-$close)/MEAN($close, 20)",
    "Mean($close, 5)/$close",
    "Mean($close, 10)/$close",
    "Sum($volume, 5)/Sum($volume, 20)",
    "Max($high, 20)/$close",
    "Min($low, 20)/$close",
    "($high-$low)/$open",
    "($close-$open)/$open",
    "Ref($close, 5)/$close",
    "Mean($volume, 10)/$volume",
    "Std($close/Ref($close, 1), 20)",
    "(Max($high, 5)-Min($low, 5))/Mean($close, 5)",
]

CELL_LABELS = ("-E -D", "+E -D cold", "+E -D warm", "+E +D warm")
POOL_NAME = "bench"


class BenchConfig(BaseModel):
    """Synthetic universe and run matrix for one benchmark."""

    instruments: int = Field(default=100, ge=1, le=9999)
    days: int = Field(default=2500, ge=1)
    pool_size: int = Field(default=80, ge=1)
    expressions: List[str] = Field(
        default_factory=lambda: list(DEFAULT_EXPRESSIONS), min_length=1
    )
    workers: List[int] = Field(default_factory=lambda: [1], min_length=1)
    seed: int = 0
    repeat: int = Field(default=3, ge=1)
    start: date = date(2007, 1, 4)

    @field_validator("workers")
    @classmethod
    def positive_workers(cls, v: List[int]) -> List[int]:
        if any(w < 1 for w in v):
            raise ValueError(f"worker counts must be >= 1, got {v}")
        return sorted(set(v))

    @model_validator(mode="after")
    def check_sizes(self) -> "BenchConfig":
        """Pool is a strict subset of the universe; history covers every lookback."""
        if self.pool_size >= self.instruments:
            raise ValueError(
                f"pool_size {self.pool_size} must be below instruments "
                f"{self.instruments} for membership to change daily"
            )
        need = self.max_lookback
        if self.days <= need:
            raise ValueError(
                f"days must exceed the largest lookback {need}, got {self.days}"
            )
        return self

    @property
    def max_lookback(self) -> int:
        return max(lookback(parse(text)) for text in self.expressions)


class BenchCell(BaseModel):
    """Timings of one (configuration, worker count) cell over all repetitions."""

    label: str
    workers: int
    mean: StageTimings
    std: StageTimings
    digest: str
    stats: EvalStats = Field(default_factory=EvalStats)


class BenchReport(BaseModel):
    """Result of a benchmark run; every cell must share one digest."""

    config: BenchConfig
    cells: List[BenchCell] = Field(default_factory=list)
    store_bytes: int = 0
    raw_payload_bytes: int = 0

    @property
    def compactness(self) -> float:
        """Store bytes over raw payload bytes."""
        if self.raw_payload_bytes == 0:
            return 0.0
        return self.store_bytes / self.raw_payload_bytes

    @property
    def digests_equal(self) -> bool:
        return len({cell.digest for cell in self.cells}) <= 1

    def cell(self, label: str, workers: int = 1) -> BenchCell:
        """Look up one cell.

        Raises:
            KeyError: If the cell was not run
        """
        for c in self.cells:
            if c.label == label and c.workers == workers:
                return c
        raise KeyError(f"no cell {label!r} with workers={workers}")

    def to_frame(self) -> pd.DataFrame:
        """Long format: one row per (config, workers, stage)."""
        records: List[Dict[str, Union[str, int, float]]] = []
        for c in self.cells:
            for stage in (*STAGES, "total"):
                records.append(
                    {
                        "config": c.label,
                        "workers": c.workers,
                        "stage": stage,
                        "mean_s": getattr(c.mean, stage),
                        "std_s": getattr(c.std, stage),
                    }
                )
        return pd.DataFrame.from_records(
            records, columns=["config", "workers", "stage", "mean_s", "std_s"]
        )

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> Optional[str]:
        """Report CSV with columns ``config,workers,stage,mean_s,std_s``."""
        return self.to_frame().to_csv(path, index=False, lineterminator="\n")
