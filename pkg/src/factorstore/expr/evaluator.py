"""Per-instrument evaluation of expression trees over calendar-index ranges."""

import logging
from typing import Optional
from typing import Union

import numpy as np

from factorstore.cache.memo import MemoCache
from factorstore.core.exceptions import MissingSeries
from factorstore.core.exceptions import UnknownAttribute
from factorstore.core.models import EvalStats
from factorstore.data.provider import SeriesProvider
from factorstore.expr.nodes import Binary
from factorstore.expr.nodes import Constant
from factorstore.expr.nodes import Node
from factorstore.expr.nodes import RawAttribute
from factorstore.expr.nodes import Ref
from factorstore.expr.nodes import Rolling
from factorstore.expr.nodes import Unary
from factorstore.expr.ops import BINARY_KERNELS
from factorstore.expr.ops import ROLLING_KERNELS
from factorstore.expr.ops import UNARY_KERNELS
from factorstore.expr.parser import parse


logger = logging.getLogger(__name__)


class Evaluator:
    """
    Evaluates expressions against a :class:`SeriesProvider`.

    Sub-results are memoized by ``(canonical key, instrument, lo, hi)``, so a
    sub-expression shared inside one tree, or across trees evaluated by the same
    evaluator, is computed once. Node ranges may start before index 0; those
    positions are NaN and raw reads are clamped to the calendar.
    """

    def __init__(
        self,
        provider: SeriesProvider,
        memo: Optional[MemoCache] = None,
        stats: Optional[EvalStats] = None,
    ):
        self.provider = provider
        self.memo = memo if memo is not None else MemoCache()
        self.stats = stats if stats is not None else EvalStats()

    def evaluate(
        self, expr: Union[str, Node], instrument: str, lo: int, hi: int
    ) -> np.ndarray:
        """
        Values of ``expr`` for one instrument at calendar indices ``[lo, hi]``.

        Args:
            expr: Expression text or parsed tree
            instrument: Instrument symbol
            lo: First calendar index
            hi: Last calendar index

        Returns:
            np.ndarray: ``hi - lo + 1`` float32 values

        Raises:
            MissingSeries: If the instrument has no data at all
            UnknownAttribute: If the instrument lacks a referenced attribute
        """
        if lo < 0 or lo > hi:
            raise ValueError(f"invalid index range [{lo}, {hi}]")
        node = parse(expr) if isinstance(expr, str) else expr
        with np.errstate(all="ignore"):
            values = self._eval(node, instrument.upper(), lo, hi)
            return values.astype(np.float32)

    def _eval(self, node: Node, instrument: str, a: int, b: int) -> np.ndarray:
        if isinstance(node, Constant):
            # No value before index 0, as for raw series.
            out = np.full(b - a + 1, node.value, dtype=np.float64)
            out[: max(0, -a)] = np.nan
            return out
        hits = self.memo.hits
        value = self.memo.get_or_compute(
            (node.key, instrument, a, b), lambda: self._compute(node, instrument, a, b)
        )
        if self.memo.hits > hits:
            self.stats.memo_hits += 1
        else:
            self.stats.memo_misses += 1
        return value

    def _compute(self, node: Node, instrument: str, a: int, b: int) -> np.ndarray:
        self.stats.node_evaluations += 1
        n = b - a + 1
        if isinstance(node, RawAttribute):
            return self._read(node.name, instrument, a, b)
        if isinstance(node, Unary):
            return UNARY_KERNELS[node.op](self._eval(node.child, instrument, a, b))
        if isinstance(node, Binary):
            lhs = self._eval(node.lhs, instrument, a, b)
            rhs = self._eval(node.rhs, instrument, a, b)
            return BINARY_KERNELS[node.op](lhs, rhs)
        if isinstance(node, Rolling):
            child = self._eval(node.child, instrument, a - node.window + 1, b)
            return ROLLING_KERNELS[node.op](child, node.window)
        if isinstance(node, Ref):
            return self._eval(node.child, instrument, a - node.shift, b)[:n].copy()
        raise TypeError(f"unsupported node {type(node).__name__}")

    def _read(self, attribute: str, instrument: str, a: int, b: int) -> np.ndarray:
        out = np.full(b - a + 1, np.nan)
        if b < 0:
            return out
        lo = max(a, 0)
        try:
            values = self.provider.read_series(instrument, attribute, lo, b)
        except MissingSeries as exc:
            if self.provider.has_instrument(instrument):
                raise UnknownAttribute(
                    f"{instrument} has no attribute ${attribute}"
                ) from exc
            raise
        self.stats.raw_reads += 1
        out[lo - a :] = values
        return out


def evaluate(
    expr: Union[str, Node],
    instrument: str,
    lo_index: int,
    hi_index: int,
    provider: SeriesProvider,
    memo: Optional[MemoCache] = None,
) -> np.ndarray:
    """Evaluate one expression for one instrument; see :meth:`Evaluator.evaluate`."""
    return Evaluator(provider, memo).evaluate(expr, instrument, lo_index, hi_index)
