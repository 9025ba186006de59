"""Python bindings for the p-Laplacian torsion lab."""

import json

from . import _plap
from ._plap import (
    ConvergenceError,
    PreconditionError,
    RadialProfile,
    ValidationError,
    ellipse_boundary_integrals,
    matrix_inequality_gap,
    p_ball_constant,
    radial_exact,
    radial_fd_solve,
)

__all__ = [
    "ConvergenceError",
    "PreconditionError",
    "RadialProfile",
    "ValidationError",
    "config_errors",
    "ellipse_boundary_integrals",
    "matrix_inequality_gap",
    "p_ball_constant",
    "radial_exact",
    "radial_fd_solve",
    "report_errors",
    "run",
    "solve_case",
]


def config_errors(config):
    return _plap.config_errors(json.dumps(config))


def report_errors(report):
    return _plap.report_errors(json.dumps(report))


def solve_case(config, p, h, identities=True):
    """Solve one (p, h) grid point of `config` and return its report entry."""
    return json.loads(_plap.solve_case(json.dumps(config), p, h, identities))


def run(command, config, out=None, seed=None):
    """Run a plap-lab command; returns (exit_code, log)."""
    return _plap.run(command, json.dumps(config), None if out is None else str(out), seed)
