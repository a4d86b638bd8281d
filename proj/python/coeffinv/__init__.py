"""Python bindings for the coeffinv PDE coefficient-estimation library."""

import json as _json

from ._core import (  # noqa: F401
    BracketFailure,
    ConfigError,
    DofField,
    Mesh,
    Network,
    OptimizationResult,
    Problem,
    SingularSystem,
    TracePoint,
    __version__,
    bfgs_minimize,
    boundary_mask,
    build_interval_mesh,
    build_unit_square_mesh,
    error_norm,
    illposedness_table,
    init_network,
    interpolate,
    misfit,
    run_gradient_checks,
    run_suite,
    solve_poisson,
    suite_ids,
)
from . import _core as _core


def make_problem(config):
    """Builds an inverse problem from a config dict (or JSON string)."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _core._make_problem_json(config)


def run_experiment(config, out_dir):
    """Runs one experiment from a config dict and writes CSV outputs."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _core._run_experiment_json(config, str(out_dir))
