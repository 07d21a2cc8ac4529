"""Search-space sampling with reweighting around a previous best point."""

from factorstore.hte.sampler import reweighted_density
from factorstore.hte.sampler import sample_prior
from factorstore.hte.sampler import sample_reweighted
from factorstore.hte.space import Categorical
from factorstore.hte.space import IntUniform
from factorstore.hte.space import LogUniform
from factorstore.hte.space import ReweightSpec
from factorstore.hte.space import SearchSpace
from factorstore.hte.space import Uniform
from factorstore.hte.space import parse_space_file

__all__ = [
    "Categorical",
    "IntUniform",
    "LogUniform",
    "ReweightSpec",
    "SearchSpace",
    "Uniform",
    "parse_space_file",
    "reweighted_density",
    "sample_prior",
    "sample_reweighted",
]
