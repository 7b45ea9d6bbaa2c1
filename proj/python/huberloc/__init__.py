"""Cooperative sensor localization with relaxed and plain Huber costs."""

from ._core import (
    DivergenceError,
    InvalidArgument,
    IoError,
    LossKind,
    MeasurementSet,
    Network,
    ParseError,
    SchemaError,
    build_topology,
    cdf_table,
    gaussian_init,
    link_cost,
    link_grad,
    load_problem,
    network_error,
    nlos_ratio,
    residual,
    run_monte_carlo,
    scenario_defaults,
    solve,
    synthesize,
)

METHODS = ("two_stage", "stage_one", "relaxed_nls", "raw_huber", "pocs", "oracle_los")

__all__ = [
    "DivergenceError",
    "InvalidArgument",
    "IoError",
    "LossKind",
    "METHODS",
    "MeasurementSet",
    "Network",
    "ParseError",
    "SchemaError",
    "build_topology",
    "cdf_table",
    "gaussian_init",
    "link_cost",
    "link_grad",
    "load_problem",
    "network_error",
    "nlos_ratio",
    "residual",
    "run_monte_carlo",
    "scenario_defaults",
    "solve",
    "synthesize",
]
