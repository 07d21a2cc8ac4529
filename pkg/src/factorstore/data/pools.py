"""Instrument pools: time-varying membership as closed date intervals."""

from datetime import date
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Set
from typing import Tuple

from pydantic import BaseModel
from pydantic import Field
from pydantic import field_validator
from pydantic import model_validator

from factorstore.core.exceptions import MalformedFile
from factorstore.core.exceptions import NonMonotonicUpdate
from factorstore.core.exceptions import OutOfRange
from factorstore.data.calendar import Calendar


DateInterval = Tuple[date, date]
IndexInterval = Tuple[int, int]


class InstrumentPool(BaseModel):
    """Membership of a named pool.

    ``memberships`` maps a symbol to its sorted, non-overlapping closed date
    intervals. ``last_date`` is the latest date recorded by an update; an
    interval ending on it is still open and is extended by the next update.
    """

    name: str
    memberships: Dict[str, List[DateInterval]] = Field(default_factory=dict)
    last_date: Optional[date] = None

    @field_validator("memberships")
    @classmethod
    def check_intervals(
        cls, v: Dict[str, List[DateInterval]]
    ) -> Dict[str, List[DateInterval]]:
        """Sort intervals and reject inverted or overlapping ones."""
        checked = {}
        for symbol, intervals in v.items():
            ordered = sorted(intervals)
            for enter, exit_ in ordered:
                if enter > exit_:
                    raise ValueError(
                        f"{symbol}: interval [{enter}, {exit_}] is inverted"
                    )
            for (_, prev_exit), (enter, _) in zip(ordered, ordered[1:]):
                if enter <= prev_exit:
                    raise ValueError(f"{symbol}: overlapping intervals at {enter}")
            checked[symbol.upper()] = ordered
        return checked

    @model_validator(mode="after")
    def default_last_date(self) -> "InstrumentPool":
        """The last recorded date is never before the latest exit date."""
        exits = [iv[1] for ivs in self.memberships.values() for iv in ivs]
        if exits and (self.last_date is None or self.last_date < max(exits)):
            self.last_date = max(exits)
        return self

    @property
    def instruments(self) -> List[str]:
        """Every symbol that has ever been a member, sorted."""
        return sorted(self.memberships)

    def members_at(self, t: date) -> Set[str]:
        """Symbols whose membership contains ``t``."""
        return {
            symbol
            for symbol, intervals in self.memberships.items()
            if any(enter <= t <= exit_ for enter, exit_ in intervals)
        }

    def append(self, t: date, members: Iterable[str]) -> None:
        """
        Record the membership at date ``t``.

        Open intervals of continuing members are extended to ``t``; members that
        were absent keep their interval closed at the previous date; newcomers
        open ``[t, t]``.

        Raises:
            NonMonotonicUpdate: If ``t`` is not later than every recorded date
        """
        if self.last_date is not None and t <= self.last_date:
            raise NonMonotonicUpdate(
                f"pool {self.name}: update {t} is not after {self.last_date}"
            )
        for symbol in {m.upper() for m in members}:
            intervals = self.memberships.setdefault(symbol, [])
            if intervals and intervals[-1][1] == self.last_date:
                intervals[-1] = (intervals[-1][0], t)
            else:
                intervals.append((t, t))
        self.last_date = t

    def resolve(
        self, calendar: Calendar, lo: int, hi: int
    ) -> Dict[str, List[IndexInterval]]:
        """
        Convert memberships to calendar-index intervals clipped to ``[lo, hi]``.

        Entry dates round forward and exit dates round backward; empty
        intersections are dropped, as are instruments left with none.
        """
        resolved: Dict[str, List[IndexInterval]] = {}
        for symbol in self.instruments:
            spans = []
            for enter, exit_ in self.memberships[symbol]:
                try:
                    a = calendar.timestamp_to_index(enter, "forward")
                    b = calendar.timestamp_to_index(exit_, "backward")
                except OutOfRange:
                    continue
                a, b = max(a, lo), min(b, hi)
                if a <= b:
                    spans.append((a, b))
            if spans:
                resolved[symbol] = spans
        return resolved

    def to_text(self) -> str:
        """File representation: ``SYMBOL<TAB>ENTER<TAB>EXIT`` lines."""
        lines = []
        for symbol in self.instruments:
            for enter, exit_ in self.memberships[symbol]:
                lines.append(f"{symbol}\t{enter.isoformat()}\t{exit_.isoformat()}\n")
        return "".join(lines)

    @classmethod
    def from_text(
        cls, name: str, text: str, last_date: Optional[date] = None
    ) -> "InstrumentPool":
        """
        Parse the pool file representation.

        Args:
            name: Pool name
            text: Pool file content
            last_date: Last update date kept beside the pool file, if any

        Raises:
            MalformedFile: On a malformed line, date or interval set
        """
        memberships: Dict[str, List[DateInterval]] = {}
        try:
            for line_num, line in enumerate(text.splitlines(), 1):
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise ValueError(f"malformed line {line_num}: {line!r}")
                symbol, enter, exit_ = parts
                interval = (
                    date.fromisoformat(enter.strip()),
                    date.fromisoformat(exit_.strip()),
                )
                memberships.setdefault(symbol.strip().upper(), []).append(interval)
            return cls(name=name, memberships=memberships, last_date=last_date)
        except ValueError as exc:
            raise MalformedFile(f"pool {name}: {exc}") from exc


class PoolState(BaseModel):
    """Sidecar of a pool file: the date of its latest update."""

    last_date: Optional[date] = None
