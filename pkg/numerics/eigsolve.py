"""
Eigen Solver

Principal Dirichlet eigenpair of the discrete mixed operator by inverse power
iteration with preconditioned conjugate gradients, plus the boundary
normal-derivative trace of the eigenfunction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import identity
from scipy.sparse.linalg import LinearOperator, cg, splu

from config import (
    CG_MAX_ITER,
    CG_TOL_FACTOR,
    DEFAULT_BOUNDARY_SAMPLES,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    NEGATIVE_CELL_TOL,
)
from errors import GridError, OperatorError, SolverError
from numerics.gridcore import GridDomain, ScalarField, distance_transform
from numerics.mixedop import MixedOperator, rayleigh_quotient

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """
    Discrete principal eigenpair.

    Attributes:
        lam: Principal eigenvalue
        u0: Nonnegative eigenfunction with sum u0^2 h^n = 1
        residual: max |A u0 - lam u0| / (lam * max |u0|) over interior cells
        iterations: Outer inverse-power iterations performed
        residual_history: Residual after every outer iteration
        negative_cells: Strictly negative cells found before the sign fix-up
    """

    lam: float
    u0: ScalarField
    residual: float
    iterations: int
    residual_history: Tuple[float, ...] = ()
    negative_cells: int = 0

    @property
    def max_value(self) -> float:
        """sup |u0|; finite by construction."""
        return float(np.max(np.abs(self.u0.values)))


@dataclass(frozen=True)
class TraceSample:
    point: Tuple[float, ...]
    normal: Tuple[float, ...]
    inner_points: Tuple[Tuple[float, ...], Tuple[float, ...]]
    derivative: float
    valid: bool


@dataclass(frozen=True)
class BoundaryTrace:
    """One-sided outward normal derivatives of u0 at analytic boundary samples."""

    samples: List[TraceSample] = field(default_factory=list)

    @property
    def valid_samples(self) -> List[TraceSample]:
        return [sample for sample in self.samples if sample.valid]

    @property
    def n_skipped(self) -> int:
        return len(self.samples) - len(self.valid_samples)

    @property
    def n_negative(self) -> int:
        return sum(1 for sample in self.valid_samples if sample.derivative < 0.0)

    @property
    def fraction_negative(self) -> float:
        valid = self.valid_samples
        return self.n_negative / len(valid) if valid else 0.0

    @property
    def degenerate(self) -> bool:
        """True when no valid sample carries a nonzero derivative."""
        return all(sample.derivative == 0.0 for sample in self.valid_samples)


def _residual(matvec, x: np.ndarray, lam: float) -> float:
    peak = float(np.max(np.abs(x)))
    return float(np.max(np.abs(matvec(x) - lam * x))) / (lam * peak)


def _preconditioner(op: MixedOperator) -> LinearOperator:
    """LU of the local part plus the nonlocal diagonal."""
    n = op.n_dof
    matrix = op.local_scale * op.local_matrix + op.nonlocal_scale * op.kernel.diagonal * identity(n)
    factor = splu(matrix.tocsc())
    return LinearOperator((n, n), matvec=factor.solve, dtype=float)


def principal_eigenpair(
    op: MixedOperator,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EigenPair:
    """
    Smallest eigenpair of the discrete operator on interior cells.

    Inverse power iteration starting from the distance transform of the
    domain; every inner solve is a CG solve warm-started at x / lam. After
    convergence the sign is fixed so that u0 >= 0 and u0 is normalized in L2.

    Args:
        op: Operator with local_scale > 0
        tol: Target relative residual
        max_iter: Maximum outer iterations

    Returns:
        EigenPair

    Raises:
        OperatorError: If local_scale <= 0
        SolverError: If the residual does not reach tol within max_iter iterations
    """
    if op.local_scale <= 0.0:
        raise OperatorError(f"Solver needs a strictly positive local part, got local_scale={op.local_scale}")
    domain = op.domain
    n = op.n_dof
    A = op.as_linear_operator()
    M = _preconditioner(op)
    inner_tol = CG_TOL_FACTOR * tol / math.sqrt(n)

    x = distance_transform(domain).interior_values()
    x = x / np.linalg.norm(x)
    lam = float(x @ op.matvec(x))
    history: List[float] = []
    residual = _residual(op.matvec, x, lam)

    for iteration in range(1, max_iter + 1):
        y, info = cg(A, x, x0=x / lam, rtol=inner_tol, atol=0.0, maxiter=CG_MAX_ITER, M=M)
        if info > 0:
            logger.debug(f"Inner CG stopped after {info} iterations at iteration {iteration}")
        x = y / np.linalg.norm(y)
        Ax = op.matvec(x)
        lam = float(x @ Ax)
        residual = float(np.max(np.abs(Ax - lam * x))) / (lam * float(np.max(np.abs(x))))
        history.append(residual)
        if residual <= tol:
            break
    else:
        raise SolverError(
            f"Inverse iteration did not reach tol={tol:g} in {max_iter} iterations (residual {residual:.3e})",
            last_residual=residual,
            iterations=max_iter,
        )

    if np.sum(x) < 0.0:
        x = -x
    negative_cells = int(np.count_nonzero(x < -NEGATIVE_CELL_TOL * np.max(np.abs(x))))
    if negative_cells:
        logger.warning(f"{negative_cells} strictly negative cells survived before the sign fix-up")
    x = np.abs(x)
    x = x / math.sqrt(float(x @ x) * domain.cell_volume)
    residual = _residual(op.matvec, x, lam)

    u0 = ScalarField.from_interior(domain, x)
    logger.info(f"Converged lambda={lam:.10g} in {iteration} iterations, residual {residual:.2e}")
    return EigenPair(lam, u0, residual, iteration, tuple(history), negative_cells)


def rayleigh_upper_bound(op: MixedOperator, trial: ScalarField) -> float:
    """Rayleigh quotient of a trial field; never below the principal eigenvalue."""
    return rayleigh_quotient(op, trial)


def normal_derivative_trace(
    pair: EigenPair,
    d: GridDomain,
    n_samples: int = DEFAULT_BOUNDARY_SAMPLES,
) -> BoundaryTrace:
    """
    Outward normal derivative of u0 at boundary points of d's analytic shape.

    At each sample xi with outward normal nu, u0 is interpolated at xi - h nu
    and xi - 2h nu and the one-sided difference (u(h) - u(2h)) / h is reported.
    Samples whose stencil points leave the shape are skipped and flagged.

    Raises:
        GridError: If d carries no analytic shape or is not the domain u0 lives on
    """
    if d.spec is None:
        raise GridError("Normal-derivative trace needs a domain built from a ShapeSpec")
    source = pair.u0.domain
    if source is not d and not (
        source.same_grid(d)
        and source.origin == d.origin
        and np.array_equal(source.interior_mask, d.interior_mask)
    ):
        raise GridError("Eigenfunction lives on a different grid domain than the trace")
    h = d.spacing
    u = pair.u0.values
    interpolator = RegularGridInterpolator(d.axes(), u, method="linear", bounds_error=False, fill_value=0.0)
    points, normals = d.spec.boundary_samples(n_samples)
    near = points - h * normals
    far = points - 2.0 * h * normals
    valid = d.spec.contains(near) & d.spec.contains(far)
    u_near = interpolator(near)
    u_far = interpolator(far)

    samples = []
    for k in range(len(points)):
        derivative = float(u_near[k] - u_far[k]) / h if valid[k] else 0.0
        samples.append(
            TraceSample(
                point=tuple(points[k]),
                normal=tuple(normals[k]),
                inner_points=(tuple(near[k]), tuple(far[k])),
                derivative=derivative,
                valid=bool(valid[k]),
            )
        )
    trace = BoundaryTrace(samples)
    if trace.n_skipped:
        logger.warning(f"Skipped {trace.n_skipped} boundary samples whose stencil leaves the domain")
    if trace.degenerate:
        logger.warning("Boundary trace is degenerate: every derivative is zero")
    return trace
