"""Random expression generation shared by the parser and evaluator tests."""

import random

import pytest


ATTRIBUTE_TERMS = ("$open", "$close", "$volume")
CONSTANT_TERMS = ("0", "1", "2", "0.5", "10")
ROLLING_NAMES = ("Mean", "STD", "sum", "Max", "min", "MEAN")
BINARY_OPERATORS = ("+", "-", "*", "/", ">", "<", ">=", "<=", "==")


def random_expression(rng: random.Random, depth: int) -> str:
    """Expression text over open/close/volume with mixed-case function names."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.8:
            return rng.choice(ATTRIBUTE_TERMS)
        return rng.choice(CONSTANT_TERMS)
    kind = rng.randrange(5)
    child = random_expression(rng, depth - 1)
    if kind == 0:
        wrapper = rng.choice(("-({})", "Abs({})", "log({})"))
        return wrapper.format(child)
    if kind == 1:
        other = random_expression(rng, depth - 1)
        return f"({child} {rng.choice(BINARY_OPERATORS)} {other})"
    if kind == 2:
        return f"{rng.choice(ROLLING_NAMES)}({child}, {rng.randint(1, 6)})"
    if kind == 3:
        return f"Ref({child}, {rng.randint(0, 4)})"
    return f"({child} / {random_expression(rng, depth - 1)})"


@pytest.fixture
def expression_source():
    """Factory of seeded random expression generators."""

    def make(seed: int):
        rng = random.Random(seed)
        return lambda: random_expression(rng, rng.randint(1, 4))

    return make
