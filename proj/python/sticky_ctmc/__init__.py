"""Sticky diffusions simulated by continuous-time Markov chains."""

from ._core import (
    ConfigError,
    Error,
    InvalidParameter,
    NegativeRate,
    NotPsd,
    StickyModel,
    __version__,
    convergence_study,
    eigh,
    estimate,
    loglog_slope,
    parse_config,
    queuing_model,
    rates,
    run_cli,
    simulate_path,
    sticky_ou_model,
)

__all__ = [
    "ConfigError",
    "Error",
    "InvalidParameter",
    "NegativeRate",
    "NotPsd",
    "StickyModel",
    "__version__",
    "convergence_study",
    "eigh",
    "estimate",
    "loglog_slope",
    "parse_config",
    "queuing_model",
    "rates",
    "run_cli",
    "simulate_path",
    "sticky_ou_model",
]
