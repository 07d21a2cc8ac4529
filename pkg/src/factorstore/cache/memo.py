"""In-memory LRU memoization of syntax-tree node results."""

from collections import OrderedDict
from typing import Callable
from typing import Dict
from typing import Hashable
from typing import Optional

import numpy as np


class MemoCache:
    """Bounded LRU map from node keys to computed value arrays.

    One instance serves a single evaluation pass (one per worker), so it takes
    no locks. Stored arrays are frozen read-only.
    """

    def __init__(self, capacity: int = 500):
        """
        Initialize the cache.

        Args:
            capacity: Maximum number of stored results, at least 1
        """
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._entries: "OrderedDict[Hashable, np.ndarray]" = OrderedDict()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[np.ndarray]:
        """Stored value for ``key`` (bumping its recency) or None."""
        value = self._entries.get(key)
        if value is None:
            self.misses += 1
            return None
        self._entries.move_to_end(key)
        self.hits += 1
        return value

    def put(self, key: Hashable, value: np.ndarray) -> None:
        """Store a value, evicting the least recently used entries past capacity."""
        value.flags.writeable = False
        self._entries[key] = value
        self._entries.move_to_end(key)
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)

    def get_or_compute(
        self, key: Hashable, thunk: Callable[[], np.ndarray]
    ) -> np.ndarray:
        """
        Return the stored value for ``key``, computing and storing it on a miss.

        Errors raised by ``thunk`` propagate and leave the cache unchanged.
        """
        value = self.get(key)
        if value is not None:
            return value
        value = thunk()
        self.put(key, value)
        return value

    def clear(self) -> None:
        self._entries.clear()

    def stats(self) -> Dict[str, int]:
        return {
            "size": len(self._entries),
            "capacity": self.capacity,
            "hits": self.hits,
            "misses": self.misses,
        }

    def __contains__(self, key: Hashable) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def memo_get_or_compute(
    memo: MemoCache, key: Hashable, thunk: Callable[[], np.ndarray]
) -> np.ndarray:
    """Functional form of :meth:`MemoCache.get_or_compute`."""
    return memo.get_or_compute(key, thunk)
