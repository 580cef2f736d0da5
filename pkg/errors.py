"""
Lab Exceptions

Exception hierarchy shared by the numerical modules and the experiment harness.
The CLI maps these onto process exit codes.
"""

from typing import Optional


class LabError(Exception):
    """Base class for every error raised by the laboratory."""


class ConfigError(LabError, ValueError):
    """Invalid experiment configuration (bad JSON, unknown keys, bad values)."""


class GridError(LabError, ValueError):
    """Degenerate shape description or grid domain."""


class OperatorError(LabError, ValueError):
    """Invalid operator construction or mismatched operands."""


class GeometryError(LabError, ValueError):
    """Invalid convex-geometry input."""


class SolverError(LabError, RuntimeError):
    """
    Eigen solver failure.

    Attributes:
        last_residual: Residual of the final iterate, if one was computed
        iterations: Number of outer iterations performed
    """

    def __init__(self, message: str, last_residual: Optional[float] = None, iterations: int = 0):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations
