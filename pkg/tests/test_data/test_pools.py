"""Tests for instrument pool membership."""

from datetime import date

import pytest
from pydantic import ValidationError

from factorstore.core.exceptions import MalformedFile
from factorstore.data.calendar import Calendar
from factorstore.data.pools import InstrumentPool


class TestInstrumentPool:
    """Test membership intervals and their resolution onto the calendar."""

    def test_append_extends_continuing_members(self, dates):
        """Members present on consecutive updates keep one interval."""
        pool = InstrumentPool(name="p")
        pool.append(dates[0], ["aaa", "BBB"])
        pool.append(dates[1], ["AAA"])
        pool.append(dates[2], ["AAA", "BBB"])

        assert pool.memberships["AAA"] == [(dates[0], dates[2])]
        assert pool.memberships["BBB"] == [(dates[0], dates[0]), (dates[2], dates[2])]
        assert pool.last_date == dates[2]

    def test_members_at(self, dates):
        """Point membership follows the closed intervals."""
        pool = InstrumentPool(
            name="p",
            memberships={"AAA": [(dates[0], dates[3])], "BBB": [(dates[2], dates[5])]},
        )
        assert pool.members_at(dates[1]) == {"AAA"}
        assert pool.members_at(dates[3]) == {"AAA", "BBB"}
        assert pool.members_at(dates[6]) == set()

    def test_overlapping_intervals_rejected(self, dates):
        """Intervals of one symbol may not overlap."""
        with pytest.raises(ValidationError):
            InstrumentPool(
                name="p",
                memberships={"AAA": [(dates[0], dates[3]), (dates[3], dates[5])]},
            )

    def test_inverted_interval_rejected(self, dates):
        """Exit before entry is invalid."""
        with pytest.raises(ValidationError):
            InstrumentPool(name="p", memberships={"AAA": [(dates[3], dates[0])]})

    def test_resolve_rounds_inward(self, dates):
        """Entry rounds forward, exit rounds backward, then clips to the range."""
        calendar = Calendar(timestamps=dates)
        saturday, sunday = date(2020, 1, 4), date(2020, 1, 12)
        pool = InstrumentPool(name="p", memberships={"AAA": [(saturday, sunday)]})

        assert pool.resolve(calendar, 0, 29) == {"AAA": [(2, 6)]}
        assert pool.resolve(calendar, 4, 5) == {"AAA": [(4, 5)]}

    def test_resolve_drops_empty(self, dates):
        """Instruments with no membership in the range are left out."""
        calendar = Calendar(timestamps=dates)
        pool = InstrumentPool(
            name="p",
            memberships={
                "AAA": [(dates[0], dates[2])],
                "BBB": [(date(2020, 1, 4), date(2020, 1, 5))],
            },
        )
        assert pool.resolve(calendar, 5, 10) == {}
        assert pool.resolve(calendar, 0, 10) == {"AAA": [(0, 2)]}

    def test_text_format(self, dates):
        """Tab-separated symbol, entry and exit per line."""
        pool = InstrumentPool(name="p", memberships={"AAA": [(dates[0], dates[1])]})
        assert pool.to_text() == "AAA\t2020-01-02\t2020-01-03\n"
        restored = InstrumentPool.from_text("p", pool.to_text())
        assert restored.memberships == pool.memberships

    def test_last_date_defaults_to_latest_exit(self, dates):
        """Without updates the latest exit is the last recorded date."""
        pool = InstrumentPool(
            name="p",
            memberships={"AAA": [(dates[0], dates[4])], "BBB": [(dates[1], dates[7])]},
        )
        assert pool.last_date == dates[7]

    def test_last_date_never_precedes_an_exit(self, dates):
        """A stale last date is raised to the latest exit."""
        pool = InstrumentPool(
            name="p", memberships={"AAA": [(dates[0], dates[4])]}, last_date=dates[2]
        )
        assert pool.last_date == dates[4]

    def test_empty_update_closes_every_interval(self, dates):
        """A date with no members ends membership; a re-entry opens a new interval."""
        pool = InstrumentPool(name="p")
        pool.append(dates[0], ["AAA"])
        pool.append(dates[1], [])
        pool.append(dates[2], ["AAA"])

        assert pool.memberships["AAA"] == [(dates[0], dates[0]), (dates[2], dates[2])]
        assert pool.members_at(dates[1]) == set()

    def test_from_text_takes_last_date(self, dates):
        """The recorded last date survives a text round trip when passed back."""
        pool = InstrumentPool(name="p", memberships={"AAA": [(dates[0], dates[0])]})
        pool.append(dates[1], [])

        restored = InstrumentPool.from_text("p", pool.to_text(), pool.last_date)
        assert restored.last_date == dates[1]

    @pytest.mark.parametrize(
        "text",
        [
            "AAA\t2020-01-02\n",
            "AAA\t2020-01-02\tlater\n",
            "AAA\t2020-01-06\t2020-01-02\n",
            "AAA\t2020-01-02\t2020-01-06\nAAA\t2020-01-03\t2020-01-07\n",
        ],
        ids=["columns", "date", "inverted", "overlap"],
    )
    def test_malformed_text(self, text):
        """Unparseable pool files raise MalformedFile."""
        with pytest.raises(MalformedFile, match="pool p"):
            InstrumentPool.from_text("p", text)
