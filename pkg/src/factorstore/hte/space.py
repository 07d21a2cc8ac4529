"""Hyperparameter search spaces and reweighting specifications."""

import math
from typing import Annotated
from typing import Dict
from typing import List
from typing import Literal
from typing import Union

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator


Value = Union[float, int, str]


class Uniform(BaseModel):
    """Continuous uniform prior on ``[lo, hi]``."""

    kind: Literal["uniform"] = "uniform"
    lo: float
    hi: float

    @model_validator(mode="after")
    def check_bounds(self) -> "Uniform":
        finite = math.isfinite(self.lo) and math.isfinite(self.hi)
        if not finite or self.lo >= self.hi:
            raise ValueError(f"need finite lo < hi, got [{self.lo}, {self.hi}]")
        return self

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, n)

    def coordinate(self, x: np.ndarray) -> np.ndarray:
        """Sampling coordinate the reweighting kernel is applied in."""
        return np.asarray(x, dtype=np.float64)

    def contains(self, x: Value) -> bool:
        return isinstance(x, (int, float)) and self.lo <= x <= self.hi

    def density(self, grid: np.ndarray) -> np.ndarray:
        inside = (grid >= self.lo) & (grid <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)


class LogUniform(BaseModel):
    """Prior uniform in ``log x`` on ``[lo, hi]`` with ``0 < lo``."""

    kind: Literal["loguniform"] = "loguniform"
    lo: float = Field(gt=0)
    hi: float

    @model_validator(mode="after")
    def check_bounds(self) -> "LogUniform":
        if not math.isfinite(self.hi) or self.lo >= self.hi:
            raise ValueError(f"need finite 0 < lo < hi, got [{self.lo}, {self.hi}]")
        return self

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.uniform(math.log(self.lo), math.log(self.hi), n)
        return np.clip(np.exp(u), self.lo, self.hi)

    def coordinate(self, x: np.ndarray) -> np.ndarray:
        return np.log(np.asarray(x, dtype=np.float64))

    def contains(self, x: Value) -> bool:
        return isinstance(x, (int, float)) and self.lo <= x <= self.hi

    def density(self, grid: np.ndarray) -> np.ndarray:
        inside = (grid >= self.lo) & (grid <= self.hi)
        safe = np.where(inside, grid, 1.0)
        return np.where(inside, 1.0 / (safe * math.log(self.hi / self.lo)), 0.0)


class IntUniform(BaseModel):
    """Discrete uniform prior on the integers ``lo..hi`` inclusive."""

    kind: Literal["int"] = "int"
    lo: int
    hi: int

    @model_validator(mode="after")
    def check_bounds(self) -> "IntUniform":
        if self.lo >= self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        return self

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.integers(self.lo, self.hi + 1, n)

    def coordinate(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64)

    def contains(self, x: Value) -> bool:
        if not isinstance(x, (int, float)) or not float(x).is_integer():
            return False
        return self.lo <= x <= self.hi

    def density(self, grid: np.ndarray) -> np.ndarray:
        inside = (grid >= self.lo) & (grid <= self.hi) & (np.mod(grid, 1) == 0)
        return np.where(inside, 1.0 / (self.hi - self.lo + 1), 0.0)


class Categorical(BaseModel):
    """Uniform choice among labels."""

    kind: Literal["categorical"] = "categorical"
    choices: List[str] = Field(min_length=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        picks = rng.integers(0, len(self.choices), n)
        return np.array(self.choices, dtype=object)[picks]

    def contains(self, x: Value) -> bool:
        return x in self.choices


Dimension = Annotated[
    Union[Uniform, LogUniform, IntUniform, Categorical], Field(discriminator="kind")
]
NUMERIC_KINDS = ("uniform", "loguniform", "int")


class SearchSpace(BaseModel):
    """Ordered named dimensions, each with its own prior."""

    dimensions: Dict[str, Dimension] = Field(min_length=1)

    @field_validator("dimensions")
    @classmethod
    def check_names(cls, v: Dict[str, Dimension]) -> Dict[str, Dimension]:
        for name in v:
            if not name or any(c.isspace() or c == "=" for c in name):
                raise ValueError(f"invalid dimension name {name!r}")
        return v

    @property
    def names(self) -> List[str]:
        return list(self.dimensions)

    def contains(self, assignment: Dict[str, Value]) -> bool:
        """Whether every value lies inside its prior's support."""
        return all(self.dimensions[k].contains(v) for k, v in assignment.items())


class ReweightSpec(BaseModel):
    """Previous best point and per-dimension kernel widths.

    Widths are in each dimension's sampling coordinate (log units for
    log-uniform priors). Dimensions without ``theta_prev`` are not reweighted.
    """

    theta_prev: Dict[str, Value] = Field(default_factory=dict)
    sigma: Dict[str, float] = Field(default_factory=dict)

    @field_validator("sigma")
    @classmethod
    def positive_sigma(cls, v: Dict[str, float]) -> Dict[str, float]:
        for name, width in v.items():
            if not (width > 0 and math.isfinite(width)):
                raise ValueError(
                    f"sigma for {name!r} must be positive and finite, got {width}"
                )
        return v

    def check_against(self, space: SearchSpace) -> None:
        """
        Validate this spec for a space.

        Raises:
            ValueError: Unknown dimension, value outside support, or missing sigma
        """
        for name, value in self.theta_prev.items():
            if name not in space.dimensions:
                raise ValueError(f"theta_prev names unknown dimension {name!r}")
            dim = space.dimensions[name]
            if not dim.contains(value):
                raise ValueError(
                    f"theta_prev {name}={value!r} is outside the prior support"
                )
            if dim.kind in NUMERIC_KINDS and name not in self.sigma:
                raise ValueError(f"no sigma given for numeric dimension {name!r}")
        for name in self.sigma:
            if name not in space.dimensions:
                raise ValueError(f"sigma names unknown dimension {name!r}")


SPACE_KINDS = {
    "uniform": Uniform,
    "loguniform": LogUniform,
    "int": IntUniform,
    "categorical": Categorical,
}


def parse_space_file(text: str) -> SearchSpace:
    """
    Parse a space description, one dimension per line::

        lr       loguniform 1e-5 1e-1
        dropout  uniform 0 0.5
        layers   int 1 4
        act      categorical relu tanh

    Blank lines and ``#`` comments are ignored.

    Raises:
        ValueError: On malformed lines (message carries the line number)
    """
    dimensions: Dict[str, Dimension] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ValueError(
                f"line {lineno}: expected 'name kind args...', got {raw.strip()!r}"
            )
        name, kind, args = parts[0], parts[1].lower(), parts[2:]
        if kind not in SPACE_KINDS:
            raise ValueError(f"line {lineno}: unknown kind {parts[1]!r}")
        if name in dimensions:
            raise ValueError(f"line {lineno}: duplicate dimension {name!r}")
        try:
            if kind == "categorical":
                dimensions[name] = Categorical(choices=args)
            elif len(args) != 2:
                raise ValueError(f"{kind} takes lo and hi")
            elif kind == "int":
                dimensions[name] = IntUniform(lo=int(args[0]), hi=int(args[1]))
            else:
                lo, hi = float(args[0]), float(args[1])
                dimensions[name] = SPACE_KINDS[kind](lo=lo, hi=hi)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    return SearchSpace(dimensions=dimensions)


def parse_assignments(text: str, space: SearchSpace) -> Dict[str, Value]:
    """
    Parse ``name=value,name=value`` into typed values for ``space``.

    Raises:
        ValueError: On unknown names or unparseable values
    """
    result: Dict[str, Value] = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        name, sep, raw = item.partition("=")
        name = name.strip()
        if not sep or name not in space.dimensions:
            raise ValueError(f"invalid assignment {item!r}")
        kind = space.dimensions[name].kind
        if kind == "categorical":
            result[name] = raw.strip()
        elif kind == "int":
            result[name] = int(raw)
        else:
            result[name] = float(raw)
    return result


def parse_widths(text: str) -> Dict[str, float]:
    """
    Parse ``name=sigma,name=sigma`` kernel widths.

    Raises:
        ValueError: On malformed items
    """
    result: Dict[str, float] = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        name, sep, raw = item.partition("=")
        if not sep or not name.strip():
            raise ValueError(f"invalid width {item!r}")
        result[name.strip()] = float(raw)
    return result
