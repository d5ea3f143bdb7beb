"""Bayesian PgW shape-parameter test for adverse drug reaction signals.

The test fits a power generalized Weibull (PgW) model to time-to-event data
and checks whether its two shape parameters are credibly different from one,
the constant-hazard case, using highest-density intervals and a region of
practical equivalence (ROPE).
"""
from .mcmc import McmcSettings, PosteriorDraws, run_chains
from .pgw import PgwParams, TteDataset
from .prior import PriorSpec, get_preset
from .ropetest import TestConfig, TestDecision, run_test
from .simgen import GridConfig, ScenarioSpec, build_grid, generate_sample

__version__ = "0.1.0"

__all__ = [
    "McmcSettings",
    "PosteriorDraws",
    "run_chains",
    "PgwParams",
    "TteDataset",
    "PriorSpec",
    "get_preset",
    "TestConfig",
    "TestDecision",
    "run_test",
    "GridConfig",
    "ScenarioSpec",
    "build_grid",
    "generate_sample",
]
