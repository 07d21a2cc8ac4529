"""Factor expression language: syntax trees, parser and evaluator."""

from factorstore.expr.evaluator import Evaluator
from factorstore.expr.evaluator import evaluate
from factorstore.expr.nodes import Node
from factorstore.expr.nodes import attributes
from factorstore.expr.nodes import canonicalize
from factorstore.expr.nodes import lookback
from factorstore.expr.nodes import walk
from factorstore.expr.parser import parse


__all__ = [
    "Evaluator",
    "Node",
    "attributes",
    "canonicalize",
    "evaluate",
    "lookback",
    "parse",
    "walk",
]
