"""Exact Monte Carlo tests for Gaussian graphical models.

Exchangeable copies of a data matrix are generated by residual rotation
under a hypothesised graph; comparing any statistic on the data with its
values on the copies gives a finite-sample valid p-value.  Two tests are
built on this: a goodness-of-fit test of the graph and a conditional
randomization test of ``Y _||_ X_T | X_{-T}``.
"""

from .crt import CrtKind, CrtProblem, CrtStatistic, run_crt, run_crt_per_variable
from .gof_stats import GofStatistic, StatKind
from .gof_test import GofTestSpec, run_gof, run_local_gof
from .graph import Graph
from .pvalue import PvalueMode
from .result import TestResult
from .sampler import SamplerConfig, exchangeable_copies

__version__ = "0.1.0"

__all__ = [
    "CrtKind",
    "CrtProblem",
    "CrtStatistic",
    "GofStatistic",
    "GofTestSpec",
    "Graph",
    "PvalueMode",
    "SamplerConfig",
    "StatKind",
    "TestResult",
    "exchangeable_copies",
    "run_crt",
    "run_crt_per_variable",
    "run_gof",
    "run_local_gof",
]
