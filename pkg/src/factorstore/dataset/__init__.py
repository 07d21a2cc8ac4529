"""Dataset building: staged per-instrument computation combined into aligned frames."""

from factorstore.dataset.builder import DatasetBuilder
from factorstore.dataset.builder import build_dataset
from factorstore.dataset.frame import AlignedFrame
from factorstore.dataset.frame import Block
from factorstore.dataset.frame import combine
from factorstore.dataset.frame import filter_by_pool

__all__ = [
    "AlignedFrame",
    "Block",
    "DatasetBuilder",
    "build_dataset",
    "combine",
    "filter_by_pool",
]
