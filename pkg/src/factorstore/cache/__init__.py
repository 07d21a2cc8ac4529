"""Caches: in-memory memoization plus the expression and dataset disk caches."""

from factorstore.cache.dataset_cache import DatasetCache
from factorstore.cache.dataset_cache import FrameRows
from factorstore.cache.entries import Hit
from factorstore.cache.entries import Miss
from factorstore.cache.entries import PartialTail
from factorstore.cache.expr_cache import ExpressionCache
from factorstore.cache.manager import CacheEntryInfo
from factorstore.cache.manager import CacheManager
from factorstore.cache.memo import MemoCache
from factorstore.cache.memo import memo_get_or_compute

__all__ = [
    "CacheEntryInfo",
    "CacheManager",
    "DatasetCache",
    "ExpressionCache",
    "FrameRows",
    "Hit",
    "MemoCache",
    "Miss",
    "PartialTail",
    "memo_get_or_compute",
]
