"""Syntax-tree nodes of factor expressions.

Nodes are immutable and compare structurally, so they can be shared across
threads and used as dictionary keys. ``key`` is the canonical rendering: fully
parenthesized, upper-case function names, constants in shortest round-trip
decimal, operands never reordered.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator
from typing import Set
from typing import Tuple


UNARY_FUNCTIONS = ("ABS", "LOG")
ROLLING_FUNCTIONS = ("MEAN", "STD", "SUM", "MAX", "MIN")
ARITHMETIC_OPS = ("+", "-", "*", "/")
COMPARISON_OPS = (">", "<", ">=", "<=", "==")


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class Node:
    """Base class of expression nodes."""

    def children(self) -> Tuple["Node", ...]:
        return ()

    @property
    def lookback(self) -> int:
        """Extra leading calendar points needed for an exact first value."""
        return max((c.lookback for c in self.children()), default=0)

    def render(self) -> str:
        raise NotImplementedError

    @cached_property
    def key(self) -> str:
        """Canonical text of this (sub-)expression."""
        return self.render()

    def __str__(self) -> str:
        return self.key


@dataclass(frozen=True)
class RawAttribute(Node):
    name: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", self.name.lower())

    def render(self) -> str:
        return f"${self.name}"


@dataclass(frozen=True)
class Constant(Node):
    """Non-negative finite literal; negation is a :class:`Unary` node."""

    value: float

    def __post_init__(self) -> None:
        value = float(self.value)
        if not math.isfinite(value) or value < 0 or math.copysign(1.0, value) < 0:
            raise ValueError(
                f"constant must be finite and non-negative, got {self.value}"
            )
        object.__setattr__(self, "value", value)

    def render(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Unary(Node):
    op: str
    child: Node

    def __post_init__(self) -> None:
        if self.op not in ("neg", "abs", "log"):
            raise ValueError(f"unknown unary operator {self.op!r}")

    def children(self) -> Tuple[Node, ...]:
        return (self.child,)

    def render(self) -> str:
        if self.op == "neg":
            return f"(-{self.child.key})"
        return f"{self.op.upper()}({self.child.key})"


@dataclass(frozen=True)
class Binary(Node):
    op: str
    lhs: Node
    rhs: Node

    def __post_init__(self) -> None:
        if self.op not in ARITHMETIC_OPS + COMPARISON_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")

    def children(self) -> Tuple[Node, ...]:
        return (self.lhs, self.rhs)

    def render(self) -> str:
        return f"({self.lhs.key}{self.op}{self.rhs.key})"


@dataclass(frozen=True)
class Rolling(Node):
    op: str
    child: Node
    window: int

    def __post_init__(self) -> None:
        if self.op not in ROLLING_FUNCTIONS:
            raise ValueError(f"unknown rolling operator {self.op!r}")
        if not _is_int(self.window) or self.window < 1:
            raise ValueError(f"window must be an integer >= 1, got {self.window!r}")

    def children(self) -> Tuple[Node, ...]:
        return (self.child,)

    @property
    def lookback(self) -> int:
        return self.child.lookback + self.window - 1

    def render(self) -> str:
        return f"{self.op}({self.child.key},{self.window})"


@dataclass(frozen=True)
class Ref(Node):
    child: Node
    shift: int

    def __post_init__(self) -> None:
        if not _is_int(self.shift) or self.shift < 0:
            raise ValueError(f"shift must be an integer >= 0, got {self.shift!r}")

    def children(self) -> Tuple[Node, ...]:
        return (self.child,)

    @property
    def lookback(self) -> int:
        return self.child.lookback + self.shift

    def render(self) -> str:
        return f"REF({self.child.key},{self.shift})"


def walk(node: Node) -> Iterator[Node]:
    """Post-order traversal of a tree."""
    for child in node.children():
        yield from walk(child)
    yield node


def attributes(node: Node) -> Set[str]:
    """Raw attribute names an expression reads."""
    return {n.name for n in walk(node) if isinstance(n, RawAttribute)}


def lookback(node: Node) -> int:
    """Minimal leading history needed so evaluation at a range start is exact."""
    return node.lookback


def canonicalize(node: Node) -> str:
    """Canonical key of an expression."""
    return node.key
