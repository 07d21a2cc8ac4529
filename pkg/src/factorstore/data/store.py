"""Append-only flat-file store for calendars, pools and attribute series."""

import logging
from datetime import date
from pathlib import Path
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from factorstore.core.exceptions import IndexBeyondCalendar
from factorstore.core.exceptions import MalformedFile
from factorstore.core.exceptions import MissingCalendar
from factorstore.core.exceptions import MissingPool
from factorstore.core.exceptions import MissingSeries
from factorstore.core.exceptions import PrefixMismatch
from factorstore.data import series
from factorstore.data.calendar import Calendar
from factorstore.data.calendar import Rounding
from factorstore.data.pools import IndexInterval
from factorstore.data.pools import InstrumentPool
from factorstore.data.pools import PoolState


logger = logging.getLogger(__name__)

CALENDARS_DIR = "calendars"
INSTRUMENTS_DIR = "instruments"
FEATURES_DIR = "features"


class FeatureStore:
    """File store rooted at a directory with ``calendars/``, ``instruments/``
    and ``features/`` subtrees.

    Every path is derived from ``(instrument, attribute, frequency)`` alone and
    a series exists exactly when its file does. Reads are safe from any number
    of callers; writes to one series must be serialized by the caller.
    """

    def __init__(self, root: Path, frequency: str = "day"):
        """
        Initialize the store.

        Args:
            root: Store root directory
            frequency: Default frequency for calls that omit it
        """
        self.root = Path(root)
        self.frequency = frequency
        self._calendars: Dict[str, Tuple[int, Calendar]] = {}

    # Layout

    def calendar_path(self, frequency: Optional[str] = None) -> Path:
        """Path of the calendar file for a frequency."""
        return self.root / CALENDARS_DIR / f"{frequency or self.frequency}.txt"

    def pool_path(self, pool: str) -> Path:
        """Path of a pool file."""
        return self.root / INSTRUMENTS_DIR / f"{pool}.txt"

    def pool_state_path(self, pool: str) -> Path:
        """Path of the sidecar holding a pool's last update date."""
        return self.root / INSTRUMENTS_DIR / f"{pool}.meta"

    def feature_path(
        self, instrument: str, attribute: str, frequency: Optional[str] = None
    ) -> Path:
        """Path of one instrument/attribute series file."""
        return (
            self.root
            / FEATURES_DIR
            / instrument.lower()
            / f"{attribute.lower()}.{frequency or self.frequency}.bin"
        )

    def init_layout(self) -> None:
        """Create the directory tree."""
        for sub in (CALENDARS_DIR, INSTRUMENTS_DIR, FEATURES_DIR):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # Calendar

    def write_calendar(self, frequency: str, timestamps: Sequence[date]) -> bool:
        """
        Persist a calendar. Rewriting with an extension of the stored calendar
        appends the new dates; any other change is refused.

        Returns:
            True if the file changed

        Raises:
            NonMonotonicCalendar: If timestamps are not strictly increasing
            PrefixMismatch: If the stored calendar is not a prefix of the new one
        """
        new = Calendar(frequency=frequency, timestamps=list(timestamps))
        path = self.calendar_path(frequency)
        if not path.exists():
            series.write_atomic(path, new.to_text().encode("utf-8"))
            logger.info(f"Wrote calendar {frequency} with {len(new)} dates")
            return True

        old = self.read_calendar(frequency)
        if len(old) > len(new) or new.timestamps[: len(old)] != old.timestamps:
            raise PrefixMismatch(
                f"stored {frequency} calendar ({len(old)} dates) is not a prefix "
                f"of the new calendar ({len(new)} dates)"
            )
        if len(new) == len(old):
            return False
        tail = Calendar(frequency=frequency, timestamps=new.timestamps[len(old):])
        with open(path, "a", encoding="utf-8", newline="\n") as f:
            f.write(tail.to_text())
        logger.info(f"Appended {len(tail)} dates to calendar {frequency}")
        return True

    def read_calendar(self, frequency: Optional[str] = None) -> Calendar:
        """
        Load a calendar, reusing the parsed copy while the file is unchanged.

        Raises:
            MissingCalendar: If no calendar exists for the frequency
            MalformedFile: If the calendar file cannot be parsed
        """
        frequency = frequency or self.frequency
        path = self.calendar_path(frequency)
        try:
            size = path.stat().st_size
        except FileNotFoundError:
            raise MissingCalendar(
                f"no {frequency} calendar under {self.root}"
            ) from None
        cached = self._calendars.get(frequency)
        if cached is not None and cached[0] == size:
            return cached[1]
        calendar = Calendar.from_text(frequency, path.read_text(encoding="utf-8"))
        self._calendars[frequency] = (size, calendar)
        return calendar

    def timestamp_to_index(
        self, t: date, rounding: Rounding = "forward", frequency: Optional[str] = None
    ) -> int:
        """Map a date onto the calendar index space."""
        return self.read_calendar(frequency).timestamp_to_index(t, rounding)

    # Series

    def has_series(
        self, instrument: str, attribute: str, frequency: Optional[str] = None
    ) -> bool:
        """Whether a series file exists."""
        return self.feature_path(instrument, attribute, frequency).exists()

    def has_instrument(self, instrument: str) -> bool:
        """Whether any series exists for the instrument."""
        return (self.root / FEATURES_DIR / instrument.lower()).is_dir()

    def list_instruments(self) -> List[str]:
        """Symbols with at least one stored series, upper-cased and sorted."""
        features = self.root / FEATURES_DIR
        if not features.is_dir():
            return []
        return sorted(p.name.upper() for p in features.iterdir() if p.is_dir())

    def list_attributes(
        self, instrument: str, frequency: Optional[str] = None
    ) -> List[str]:
        """Attribute names stored for an instrument at a frequency."""
        suffix = f".{frequency or self.frequency}.bin"
        directory = self.root / FEATURES_DIR / instrument.lower()
        if not directory.is_dir():
            return []
        return sorted(p.name[: -len(suffix)] for p in directory.glob(f"*{suffix}"))

    def series_extent(
        self, instrument: str, attribute: str, frequency: Optional[str] = None
    ) -> Tuple[int, int]:
        """
        Start index and stored length of a series.

        Raises:
            MissingSeries: If the series does not exist
        """
        path = self.feature_path(instrument, attribute, frequency)
        try:
            return series.extent(path)
        except FileNotFoundError:
            raise MissingSeries(f"no series {instrument}/{attribute}") from None

    def write_series(
        self,
        instrument: str,
        attribute: str,
        frequency: Optional[str],
        start_index: int,
        values: np.ndarray,
    ) -> None:
        """
        Write a complete series file.

        Raises:
            IndexBeyondCalendar: If the series would end past the calendar
        """
        values = np.asarray(values, dtype=np.float32)
        calendar = self.read_calendar(frequency)
        if start_index < 0 or start_index + len(values) > len(calendar):
            raise IndexBeyondCalendar(
                f"{instrument}/{attribute}: [{start_index}, "
                f"{start_index + len(values)}) exceeds calendar of {len(calendar)}"
            )
        path = self.feature_path(instrument, attribute, frequency)
        series.write(path, start_index, values)
        logger.debug(
            f"Wrote {instrument}/{attribute} start={start_index} n={len(values)}"
        )

    def append_series(
        self,
        instrument: str,
        attribute: str,
        frequency: Optional[str],
        new_values: np.ndarray,
    ) -> None:
        """
        Append values at the tail of an existing series.

        Raises:
            MissingSeries: If the series does not exist
            IndexBeyondCalendar: If the series would end past the calendar
        """
        new_values = np.asarray(new_values, dtype=np.float32)
        start, length = self.series_extent(instrument, attribute, frequency)
        if len(new_values) == 0:
            return
        calendar = self.read_calendar(frequency)
        if start + length + len(new_values) > len(calendar):
            raise IndexBeyondCalendar(
                f"{instrument}/{attribute}: append of {len(new_values)} past tail "
                f"{start + length} exceeds calendar of {len(calendar)}"
            )
        series.append(self.feature_path(instrument, attribute, frequency), new_values)
        logger.debug(f"Appended {len(new_values)} values to {instrument}/{attribute}")

    def read_series(
        self,
        instrument: str,
        attribute: str,
        frequency: Optional[str],
        lo_index: int,
        hi_index: int,
    ) -> np.ndarray:
        """
        Read calendar indices ``[lo_index, hi_index]`` as float32.

        Positions outside the stored range are NaN.

        Raises:
            MissingSeries: If the series does not exist
        """
        if lo_index < 0 or lo_index > hi_index:
            raise ValueError(f"invalid index range [{lo_index}, {hi_index}]")
        path = self.feature_path(instrument, attribute, frequency)
        try:
            return series.read_range(path, lo_index, hi_index)
        except FileNotFoundError:
            raise MissingSeries(f"no series {instrument}/{attribute}") from None

    # Pools

    def has_pool(self, pool: str) -> bool:
        """Whether a pool file exists."""
        return self.pool_path(pool).exists()

    def list_pools(self) -> List[str]:
        """Names of stored pools."""
        directory = self.root / INSTRUMENTS_DIR
        if not directory.is_dir():
            return []
        return sorted(p.stem for p in directory.glob("*.txt"))

    def read_pool(self, pool: str) -> InstrumentPool:
        """
        Load a pool.

        Raises:
            MissingPool: If the pool file does not exist
            MalformedFile: If the pool file or its sidecar cannot be parsed
        """
        path = self.pool_path(pool)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise MissingPool(f"no pool named {pool!r}") from None
        return InstrumentPool.from_text(pool, text, self._read_pool_state(pool))

    def _read_pool_state(self, pool: str) -> Optional[date]:
        path = self.pool_state_path(pool)
        if not path.exists():
            return None
        try:
            return PoolState.model_validate_json(path.read_bytes()).last_date
        except ValueError as exc:
            raise MalformedFile(f"pool {pool}: unreadable sidecar {path}") from exc

    def write_pool(self, pool: InstrumentPool) -> None:
        """Persist a pool, then the sidecar recording its last update date."""
        series.write_atomic(self.pool_path(pool.name), pool.to_text().encode("utf-8"))
        state = PoolState(last_date=pool.last_date)
        series.write_atomic(
            self.pool_state_path(pool.name), state.model_dump_json().encode("utf-8")
        )
        logger.info(f"Wrote pool {pool.name} with {len(pool.memberships)} instruments")

    def resolve_pool(
        self, pool: str, lo_index: int, hi_index: int, frequency: Optional[str] = None
    ) -> Dict[str, List[IndexInterval]]:
        """
        Membership of a pool as index intervals clipped to ``[lo_index, hi_index]``.

        Raises:
            MissingPool: If the pool file does not exist
        """
        calendar = self.read_calendar(frequency)
        return self.read_pool(pool).resolve(calendar, lo_index, hi_index)

    def append_pool(self, pool: str, t: date, members: Iterable[str]) -> None:
        """
        Record the membership of ``pool`` at date ``t``; creates the pool on
        first use.

        Raises:
            NonMonotonicUpdate: If ``t`` is not after every recorded date
        """
        if self.has_pool(pool):
            current = self.read_pool(pool)
        else:
            current = InstrumentPool(name=pool)
        current.append(t, members)
        self.write_pool(current)

    # Accounting

    def feature_bytes(self) -> int:
        """Total bytes of all series files."""
        features = self.root / FEATURES_DIR
        if not features.is_dir():
            return 0
        return sum(p.stat().st_size for p in features.rglob("*.bin"))

    def __repr__(self) -> str:
        name = self.__class__.__name__
        return f"{name}(root='{self.root}', frequency='{self.frequency}')"

