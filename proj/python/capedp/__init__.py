"""Correlated-noise distributed differential privacy simulator."""

import json

from capedp._cape import (
    CapeError,
    build_coeffs,
    cape_aggregate,
    cape_delta,
    cape_moments,
    communication_cost,
    conventional_aggregate,
    conventional_delta,
    gaussian_tau,
    gen_synthetic_regression,
    h_ratio,
    h_ratio_upper_bound,
    max_colluders,
    minimize_quadratic,
    run_cape_fm,
    sensitivity_table,
)
from capedp._cape import run_experiment as _run_experiment

__all__ = [
    "CapeError",
    "build_coeffs",
    "cape_aggregate",
    "cape_delta",
    "cape_moments",
    "communication_cost",
    "conventional_aggregate",
    "conventional_delta",
    "gaussian_tau",
    "gen_synthetic_regression",
    "h_ratio",
    "h_ratio_upper_bound",
    "max_colluders",
    "minimize_quadratic",
    "run_cape_fm",
    "run_experiment",
    "sensitivity_table",
]


def run_experiment(config):
    """Runs an experiment from a dict (or JSON string) config.

    Fields left out take the defaults of config["experiment"].
    """
    if not isinstance(config, str):
        config = json.dumps(config)
    return _run_experiment(config)
