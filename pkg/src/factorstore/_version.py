"""Version information for factorstore."""

__version__ = "1.0.0"
__version_info__ = (1, 0, 0)

# Version history
VERSION_HISTORY = {
    "1.0.0": {
        "date": "2026-10-18",
        "changes": [
            "Append-only flat-file store (calendar, pools, per-attribute series)",
            "Factor expression language with rolling-window operators",
            "In-memory LRU memoization plus expression and dataset disk caches",
            "Staged parallel dataset builder",
            "Reweighted hyperparameter search-space sampler",
            "Staged benchmark harness",
        ],
    }
}


def get_version() -> str:
    """Get the current version string."""
    return __version__


def get_version_info() -> tuple:
    """Get the version tuple."""
    return __version_info__
