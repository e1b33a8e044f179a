"""Sparse non-negative solvers producing solution paths."""

from .lars import lars_path
from .lasso import lambda_max, lasso_path, lasso_solve
from .nnls import nnls, ridge_nnls
from .omp import omp_path
from .path import PathPoint, SolutionPath

ALGORITHMS = ("LASSO", "LARS", "OMP")


def solve_path(system, algorithm: str, **options) -> SolutionPath:
    """Dispatch by algorithm name (case-insensitive)."""
    name = algorithm.upper()
    if name == "LASSO":
        return lasso_path(system, **options)
    if name == "LARS":
        return lars_path(system, **options)
    if name == "OMP":
        return omp_path(system, **options)
    from ..errors import ConfigurationError

    raise ConfigurationError(f"unknown algorithm {algorithm!r}")


__all__ = [
    "ALGORITHMS", "PathPoint", "SolutionPath", "lambda_max", "lars_path", "lasso_path",
    "lasso_solve", "nnls", "omp_path", "ridge_nnls", "solve_path",
]
