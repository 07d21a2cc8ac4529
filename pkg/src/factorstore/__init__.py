"""factorstore - columnar time-series store and factor expression engine."""

from factorstore._version import __version__
from factorstore._version import __version_info__


__all__ = ["__version__", "__version_info__"]
