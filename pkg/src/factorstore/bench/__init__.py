"""Synthetic data generation and the staged cache benchmark."""

from factorstore.bench.harness import run_benchmark
from factorstore.bench.models import DEFAULT_EXPRESSIONS
from factorstore.bench.models import BenchCell
from factorstore.bench.models import BenchConfig
from factorstore.bench.models import BenchReport
from factorstore.bench.synthetic import generate_synthetic

__all__ = [
    "DEFAULT_EXPRESSIONS",
    "BenchCell",
    "BenchConfig",
    "BenchReport",
    "generate_synthetic",
    "run_benchmark",
]
