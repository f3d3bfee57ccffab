"""Prescribed mean curvature Killing graphs: solver and certificates."""

import json
from pathlib import Path

import numpy as np

from . import _core
from ._core import DomainError, MeshError, NewtonStalled, ParameterError, Problem, SingularSystemError

__all__ = [
    "DomainError",
    "MeshError",
    "NewtonStalled",
    "ParameterError",
    "Problem",
    "SingularSystemError",
    "certify",
    "check",
    "jacobian",
    "load",
    "newton",
    "parse",
    "probe",
    "residual",
    "solve",
    "verify",
]


def load(path):
    """Load and validate a problem file."""
    return _core.load_problem(Path(path))


def parse(doc, base_dir="."):
    """Build a problem from a dict with the problem-file schema."""
    return _core.parse_problem(json.dumps(doc), Path(base_dir))


def solve(problem):
    """Continuation solve; returns (z per vertex, report dict)."""
    z, report = _core.solve(problem)
    return z, json.loads(report)


def newton(problem, tau, z0):
    """Damped Newton at fixed tau; returns (z, iterations)."""
    return _core.newton(problem, tau, np.asarray(z0, dtype=float))


def residual(problem, z, tau=1.0):
    """Weak residual of Q_tau on the interior vertices."""
    return _core.residual(problem, np.asarray(z, dtype=float), tau)


def jacobian(problem, z, tau=1.0):
    """Jacobian of the interior residual as a scipy CSR matrix, plus the vertex ids of its rows."""
    from scipy.sparse import csr_matrix

    rows, cols, vals, vertices = _core.jacobian(problem, np.asarray(z, dtype=float), tau)
    n = len(vertices)
    return csr_matrix((vals, (rows, cols)), shape=(n, n)), np.asarray(vertices)


def check(problem):
    """Hypothesis report as a dict."""
    return json.loads(_core.check(problem))


def certify(problem, z):
    """Height and boundary barrier certificates; returns (dict, valid)."""
    doc, valid = _core.certify(problem, np.asarray(z, dtype=float))
    return json.loads(doc), valid


def verify(problem, z):
    """Recovered against prescribed mean curvature; returns (dict, passed)."""
    doc, passed = _core.verify(problem, np.asarray(z, dtype=float))
    return json.loads(doc), passed


def probe(problem, depths=(0.05, 0.1, 0.15)):
    """Cylinder mean curvature over the parallel sets {d = eps}."""
    return json.loads(_core.probe(problem, list(depths)))
