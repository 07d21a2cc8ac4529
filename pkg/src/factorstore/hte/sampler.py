"""
Prior and reweighted sampling over search spaces.

The reweighted distribution multiplies a dimension's prior by a Gaussian
kernel centred on the previous best value, in the prior's sampling
coordinate. It is sampled exactly by rejection: propose from the prior,
accept with probability ``exp(-(u - u_prev)^2 / (2 sigma^2))``. The kernel
peaks at 1, so its normalizer never has to be computed.
"""

import logging
from typing import Dict
from typing import List
from typing import Optional

import numpy as np

from factorstore.core.exceptions import DegenerateAcceptance
from factorstore.hte.space import NUMERIC_KINDS
from factorstore.hte.space import Dimension
from factorstore.hte.space import ReweightSpec
from factorstore.hte.space import SearchSpace
from factorstore.hte.space import Value


logger = logging.getLogger(__name__)

TRIAL_SIZE = 1_000_000
MIN_ACCEPTANCE = 1e-6
MIN_BATCH = 1024

Assignment = Dict[str, Value]


def _assemble(
    space: SearchSpace, columns: Dict[str, np.ndarray], n: int
) -> List[Assignment]:
    lists = {name: columns[name].tolist() for name in space.names}
    return [{name: lists[name][k] for name in space.names} for k in range(n)]


def sample_prior(
    space: SearchSpace, n: int, seed: Optional[int] = None
) -> List[Assignment]:
    """
    Draw ``n`` independent assignments from the prior.

    Args:
        space: Search space
        n: Number of assignments, ``n >= 0``
        seed: Seed for reproducible draws

    Returns:
        List of name -> value dictionaries in dimension order
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    rng = np.random.default_rng(seed)
    columns = {name: dim.sample(rng, n) for name, dim in space.dimensions.items()}
    return _assemble(space, columns, n)


def kernel(u: np.ndarray, u_prev: float, sigma: float) -> np.ndarray:
    """Unnormalized Gaussian kernel, 1 at ``u_prev``."""
    return np.exp(-((u - u_prev) ** 2) / (2.0 * sigma * sigma))


def _reject(
    dim: Dimension,
    theta_prev: Value,
    sigma: float,
    n: int,
    rng: np.random.Generator,
    trial_size: int,
) -> np.ndarray:
    if n == 0:
        return dim.sample(rng, 0)
    u_prev = float(dim.coordinate(np.array([theta_prev]))[0])
    kept: List[np.ndarray] = []
    accepted = 0
    proposed = 0
    batch = max(MIN_BATCH, n)
    while accepted < n:
        x = dim.sample(rng, batch)
        keep = rng.random(batch) < kernel(dim.coordinate(x), u_prev, sigma)
        proposed += batch
        accepted += int(keep.sum())
        kept.append(x[keep])
        rate = accepted / proposed
        if proposed >= trial_size and rate < MIN_ACCEPTANCE:
            raise DegenerateAcceptance(
                f"acceptance rate {rate:.3g} over {proposed} proposals; "
                f"sigma={sigma} is too small for the prior width"
            )
        remaining = n - accepted
        wanted = 1.2 * remaining / max(rate, MIN_ACCEPTANCE)
        batch = int(min(trial_size, max(MIN_BATCH, wanted)))
    logger.debug(f"rejection sampler accepted {accepted}/{proposed}")
    return np.concatenate(kept)[:n]


def sample_reweighted(
    space: SearchSpace,
    reweight: ReweightSpec,
    n: int,
    seed: Optional[int] = None,
    trial_size: int = TRIAL_SIZE,
) -> List[Assignment]:
    """
    Draw ``n`` assignments from the prior reweighted around ``theta_prev``.

    Numeric dimensions named in ``reweight.theta_prev`` are sampled by
    rejection; categorical dimensions and dimensions without a previous value
    come from the prior unchanged. Every sample stays inside the prior's support.

    Raises:
        ValueError: If ``reweight`` does not fit ``space``
        DegenerateAcceptance: If sigma is so small that almost nothing is accepted
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    reweight.check_against(space)
    rng = np.random.default_rng(seed)
    columns = {}
    for name, dim in space.dimensions.items():
        if dim.kind in NUMERIC_KINDS and name in reweight.theta_prev:
            columns[name] = _reject(
                dim, reweight.theta_prev[name], reweight.sigma[name], n, rng, trial_size
            )
        else:
            columns[name] = dim.sample(rng, n)
    return _assemble(space, columns, n)


def _integrate(values: np.ndarray, grid: np.ndarray) -> float:
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    return float(trapezoid(values, grid))


def reweighted_density(
    dim: Dimension, theta_prev: Value, sigma: float, grid: np.ndarray
) -> np.ndarray:
    """
    Normalized density of the reweighted distribution on ``grid``.

    Continuous dimensions are normalized by trapezoid integration over the
    grid (which should span the support); integer dimensions return
    probabilities at integer grid points.
    """
    if dim.kind not in NUMERIC_KINDS:
        raise ValueError("categorical dimensions are not reweighted")
    grid = np.asarray(grid, dtype=np.float64)
    u_prev = float(dim.coordinate(np.array([theta_prev]))[0])
    with np.errstate(all="ignore"):
        inside = (grid >= dim.lo) & (grid <= dim.hi)
        u = dim.coordinate(np.where(inside, grid, dim.lo))
        raw = np.where(inside, dim.density(grid) * kernel(u, u_prev, sigma), 0.0)
    total = float(raw.sum()) if dim.kind == "int" else _integrate(raw, grid)
    return raw / total
