"""Shared trading calendar: maps dates to dense integer indices."""

from datetime import date
from typing import List
from typing import Literal
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import PrivateAttr
from pydantic import field_validator

from factorstore.core.exceptions import EmptyRange
from factorstore.core.exceptions import MalformedFile
from factorstore.core.exceptions import NonMonotonicCalendar
from factorstore.core.exceptions import OutOfRange


Rounding = Literal["forward", "backward"]


class Calendar(BaseModel):
    """Strictly increasing timeline for one frequency.

    The index of a timestamp is its zero-based position, so the index space is
    dense over ``[0, len)``.
    """

    frequency: str = "day"
    timestamps: List[date]

    _array: np.ndarray = PrivateAttr()

    @field_validator("timestamps")
    @classmethod
    def strictly_increasing(cls, v: List[date]) -> List[date]:
        """Reject duplicates and out-of-order timestamps."""
        for i in range(1, len(v)):
            if v[i] <= v[i - 1]:
                raise NonMonotonicCalendar(
                    f"calendar not strictly increasing at position {i}: "
                    f"{v[i - 1]} then {v[i]}"
                )
        return v

    def model_post_init(self, __context) -> None:
        """Build the datetime64 lookup array."""
        self._array = np.array(self.timestamps, dtype="datetime64[D]")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def array(self) -> np.ndarray:
        """Timestamps as a ``datetime64[D]`` array."""
        return self._array

    @property
    def last_index(self) -> int:
        """Index of the latest timestamp (T)."""
        return len(self.timestamps) - 1

    def timestamp_to_index(self, t: date, rounding: Rounding = "forward") -> int:
        """
        Map a date onto the calendar.

        Args:
            t: Date to locate
            rounding: ``forward`` rounds to the next listed timestamp >= t,
                ``backward`` to the last listed timestamp <= t

        Returns:
            Calendar index

        Raises:
            OutOfRange: If rounding runs off either end of the calendar
        """
        if not self.timestamps:
            raise OutOfRange("calendar is empty")
        pos = int(np.searchsorted(self._array, np.datetime64(t, "D"), side="left"))
        exact = pos < len(self._array) and self.timestamps[pos] == t
        if exact:
            return pos
        if rounding == "forward":
            if pos >= len(self._array):
                raise OutOfRange(f"{t} is after the last calendar date")
            return pos
        if pos == 0:
            raise OutOfRange(f"{t} is before the first calendar date")
        return pos - 1

    def locate_range(self, start: date, end: date) -> Tuple[int, int]:
        """
        Index interval covering ``start <= t <= end``.

        Raises:
            EmptyRange: If no calendar point falls in the range
        """
        try:
            lo = self.timestamp_to_index(start, "forward")
            hi = self.timestamp_to_index(end, "backward")
        except OutOfRange as e:
            raise EmptyRange(f"no calendar points in [{start}, {end}]") from e
        if lo > hi:
            raise EmptyRange(f"no calendar points in [{start}, {end}]")
        return lo, hi

    def date_at(self, index: int) -> date:
        """Date at a calendar index."""
        return self.timestamps[index]

    def to_text(self) -> str:
        """File representation: one ISO date per line, LF-terminated."""
        return "".join(f"{d.isoformat()}\n" for d in self.timestamps)

    @classmethod
    def from_text(cls, frequency: str, text: str) -> "Calendar":
        """
        Parse the calendar file representation.

        Raises:
            MalformedFile: If a line is not an ISO date
        """
        lines = (line.strip() for line in text.splitlines())
        try:
            dates = [date.fromisoformat(line) for line in lines if line]
        except ValueError as exc:
            raise MalformedFile(f"{frequency} calendar: {exc}") from exc
        return cls(frequency=frequency, timestamps=dates)
