"""Elementwise and rolling-window kernels.

All kernels take and return float64 arrays and never warn: callers run them
under ``np.errstate(all="ignore")``. Rolling kernels receive ``window - 1``
leading values of history and return one value per window. Each output is
reduced from its own window in a fixed order, so a value never depends on
which range it was computed in.
"""

from typing import Callable
from typing import Dict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def negate(x: np.ndarray) -> np.ndarray:
    return -x


def absolute(x: np.ndarray) -> np.ndarray:
    return np.abs(x)


def safe_log(x: np.ndarray) -> np.ndarray:
    """Natural log; NaN for non-positive inputs."""
    out = np.full_like(x, np.nan)
    np.log(x, out=out, where=x > 0)
    return out


def safe_divide(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Division; NaN where the divisor is zero."""
    out = lhs / rhs
    out[rhs == 0] = np.nan
    return out


def _comparison(op: Callable[[np.ndarray, np.ndarray], np.ndarray]):
    def compare(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        out = op(lhs, rhs).astype(np.float64)
        out[np.isnan(lhs) | np.isnan(rhs)] = np.nan
        return out

    return compare


UNARY_KERNELS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "neg": negate,
    "abs": absolute,
    "log": safe_log,
}

BINARY_KERNELS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": safe_divide,
    ">": _comparison(np.greater),
    "<": _comparison(np.less),
    ">=": _comparison(np.greater_equal),
    "<=": _comparison(np.less_equal),
    "==": _comparison(np.equal),
}


def _windows(x: np.ndarray, window: int) -> np.ndarray:
    return sliding_window_view(x, window)


def rolling_sum(x: np.ndarray, window: int) -> np.ndarray:
    """Sum over each trailing window, accumulated left to right."""
    w = _windows(x, window)
    acc = w[:, 0].copy()
    for k in range(1, window):
        acc += w[:, k]
    return acc


def rolling_mean(x: np.ndarray, window: int) -> np.ndarray:
    return rolling_sum(x, window) / window


def rolling_std(x: np.ndarray, window: int) -> np.ndarray:
    """Sample standard deviation (divisor ``window - 1``); NaN for a window of 1."""
    if window == 1:
        return np.full(len(x), np.nan)
    w = _windows(x, window)
    mean = rolling_mean(x, window)
    acc = np.zeros(len(mean))
    for k in range(window):
        dev = w[:, k] - mean
        acc += dev * dev
    return np.sqrt(acc / (window - 1))


def rolling_max(x: np.ndarray, window: int) -> np.ndarray:
    w = _windows(x, window)
    acc = w[:, 0].copy()
    for k in range(1, window):
        np.maximum(acc, w[:, k], out=acc)
    return acc


def rolling_min(x: np.ndarray, window: int) -> np.ndarray:
    w = _windows(x, window)
    acc = w[:, 0].copy()
    for k in range(1, window):
        np.minimum(acc, w[:, k], out=acc)
    return acc


ROLLING_KERNELS: Dict[str, Callable[[np.ndarray, int], np.ndarray]] = {
    "SUM": rolling_sum,
    "MEAN": rolling_mean,
    "STD": rolling_std,
    "MAX": rolling_max,
    "MIN": rolling_min,
}
