"""Installation and packaging tests."""
