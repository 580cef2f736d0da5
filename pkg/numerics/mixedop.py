"""
Mixed Operator

Discrete L = -Laplacian + (-Laplacian)^s on a GridDomain with the exterior
Dirichlet condition, the bilinear energy forms and the Rayleigh quotient.

The fractional part uses the unnormalized kernel |y|^(-n-2s):

    (-Laplacian)^s u(x) = 1/2 * sum_j w_j (2u(x) - u(x+j) - u(x-j)) + tau * u(x)

where w_j integrates the kernel over grid cell j, the cell containing the
origin is dropped, and tau is the exact tail integral beyond the kernel reach.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Tuple

import numpy as np
import scipy.fft
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss
from scipy.sparse.linalg import LinearOperator

from config import NEAR_FIELD_GAUSS_ORDER, UNIT_SPHERE_MEASURE
from errors import OperatorError
from numerics.gridcore import GridDomain, ScalarField

logger = logging.getLogger(__name__)


def cell_weight_1d(s: float, a: float, b: float) -> float:
    """Exact integral of |y|^(-1-2s) over the cell [a, b], 0 < a < b."""
    return (a ** (-2.0 * s) - b ** (-2.0 * s)) / (2.0 * s)


def tail_coefficient(s: float, dim: int, radius: float) -> float:
    """Closed-form integral of |y|^(-n-2s) over {|y| > radius}."""
    return UNIT_SPHERE_MEASURE[dim] * radius ** (-2.0 * s) / (2.0 * s)


def _check_exponent(s: float):
    if not 0.0 < s < 1.0:
        raise OperatorError(f"Fractional exponent must lie in (0, 1), got {s}")


def _near_field_weights(s: float, order: int) -> np.ndarray:
    """Gauss-Legendre integrals of |z|^(-2-2s) over the 8 unit cells around the origin (3x3 table)."""
    nodes, gauss_weights = leggauss(order)
    nodes = 0.5 * nodes
    gauss_weights = 0.5 * gauss_weights
    table = np.zeros((3, 3))
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            if a == 0 and b == 0:
                continue
            x = a + nodes[:, None]
            y = b + nodes[None, :]
            integrand = (x * x + y * y) ** (-1.0 - s)
            table[a + 1, b + 1] = float(gauss_weights @ integrand @ gauss_weights)
    return table


@dataclass(frozen=True, eq=False)
class FractionalKernel:
    """
    Cell-integrated weights of |y|^(-n-2s) plus the analytic tail.

    Attributes:
        s: Fractional exponent in (0, 1)
        dim: Spatial dimension
        spacing: Grid spacing h the weights were integrated for
        reach: Largest offset norm M in cells; the table covers |j| <= M + 1/2
        table: Dense weight array of shape (2M+1,)*dim, centered, zero at the origin
        tail_radius: R = (M + 1/2) h
        tail_coeff: tau(R)
    """

    s: float
    dim: int
    spacing: float
    reach: int
    table: np.ndarray
    tail_radius: float
    tail_coeff: float

    @cached_property
    def total_weight(self) -> float:
        """Sum of all table weights."""
        return float(np.sum(self.table))

    @property
    def diagonal(self) -> float:
        """Coefficient of u(x) in the nonlocal operator at an interior cell."""
        return self.total_weight + self.tail_coeff

    def weight(self, offset) -> float:
        """Weight of a single integer offset (0 outside the table)."""
        idx = tuple(int(j) + self.reach for j in np.atleast_1d(offset))
        if any(i < 0 or i >= 2 * self.reach + 1 for i in idx):
            return 0.0
        return float(self.table[idx])

    def offsets(self, limits: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nonzero offsets with |j_k| <= limits[k], in lexicographic order.

        Returns:
            (offsets of shape (K, dim), weights of shape (K,))
        """
        slices = tuple(
            slice(self.reach - min(lim, self.reach), self.reach + min(lim, self.reach) + 1) for lim in limits
        )
        window = self.table[slices]
        idx = np.argwhere(window > 0.0)
        start = np.array([sl.start for sl in slices])
        return idx + start - self.reach, window[tuple(idx.T)]


def build_kernel(s: float, d: GridDomain) -> FractionalKernel:
    """
    Integrate the fractional kernel over the grid cells of d.

    1D weights are exact cell integrals. In 2D the midpoint rule is used except
    for the 8 cells touching the origin cell, which use tensor Gauss-Legendre
    quadrature of order NEAR_FIELD_GAUSS_ORDER.

    Args:
        s: Exponent in (0, 1)
        d: Domain fixing the dimension, spacing and bbox extent

    Returns:
        FractionalKernel whose reach covers every offset between two bbox cells

    Raises:
        OperatorError: If s is outside (0, 1)
    """
    _check_exponent(s)
    h = d.spacing
    counts = np.asarray(d.shape) - 1
    reach = int(math.ceil(float(np.linalg.norm(counts))))
    radius = (reach + 0.5) * h
    j = np.arange(-reach, reach + 1)

    if d.dim == 1:
        a = (np.abs(j) - 0.5) * h
        b = (np.abs(j) + 0.5) * h
        table = np.where(j == 0, 0.0, (np.abs(a) ** (-2 * s) - b ** (-2 * s)) / (2 * s))
    else:
        jx, jy = np.meshgrid(j, j, indexing="ij")
        r2 = (jx * jx + jy * jy).astype(float)
        with np.errstate(divide="ignore"):
            table = np.where(r2 > 0, r2 ** (-1.0 - s), 0.0)
        table[r2 > (reach + 0.5) ** 2] = 0.0
        table[reach - 1:reach + 2, reach - 1:reach + 2] = _near_field_weights(s, NEAR_FIELD_GAUSS_ORDER)
        table *= h ** (-2.0 * s)

    table.setflags(write=False)
    kernel = FractionalKernel(
        s=float(s),
        dim=d.dim,
        spacing=h,
        reach=reach,
        table=table,
        tail_radius=radius,
        tail_coeff=tail_coefficient(s, d.dim, radius),
    )
    logger.debug(f"Built kernel s={s}, dim={d.dim}, reach={reach} cells, tail={kernel.tail_coeff:.6g}")
    return kernel


class EnergyForms(NamedTuple):
    """Unscaled local and nonlocal forms and the scaled total."""

    local: float
    nonlocal_: float
    total: float


@dataclass(frozen=True, eq=False)
class MixedOperator:
    """
    local_scale * (-Laplacian_h) + nonlocal_scale * (-Laplacian_h)^s on a fixed domain.

    Attributes:
        domain: GridDomain the operator acts on
        kernel: FractionalKernel built for the domain's grid
        local_scale: Weight of the local part
        nonlocal_scale: Weight of the fractional part
    """

    domain: GridDomain
    kernel: FractionalKernel
    local_scale: float = 1.0
    nonlocal_scale: float = 1.0

    @property
    def s(self) -> float:
        return self.kernel.s

    @property
    def n_dof(self) -> int:
        return self.domain.n_interior

    @cached_property
    def kernel_spectrum(self) -> np.ndarray:
        """rfftn of the weight table embedded in a circulant of the padded bbox size."""
        shape = self.domain.shape
        fft_shape = tuple(scipy.fft.next_fast_len(2 * n - 1, real=True) for n in shape)
        offsets, weights = self.kernel.offsets(tuple(n - 1 for n in shape))
        circulant = np.zeros(fft_shape)
        # wrap negative offsets to the end of each axis
        circulant[tuple((offsets % np.asarray(fft_shape)).T)] = weights
        return scipy.fft.rfftn(circulant, s=fft_shape)

    @cached_property
    def local_matrix(self) -> sp.csr_matrix:
        """Sparse 3/5-point -Laplacian on interior cells (lexicographic order)."""
        return _local_matrix(self.domain)

    @cached_property
    def domain_coverage(self) -> np.ndarray:
        """c(x) = sum_j w_j 1_Omega(x+j); weight mass that stays inside the domain."""
        return self._convolve(self.domain.interior_mask.astype(float))

    def _convolve(self, values: np.ndarray) -> np.ndarray:
        """sum_j w_j values(x+j) over the bbox, by FFT."""
        spectrum = self.kernel_spectrum
        fft_shape = tuple(scipy.fft.next_fast_len(2 * n - 1, real=True) for n in self.domain.shape)
        result = scipy.fft.irfftn(scipy.fft.rfftn(values, s=fft_shape) * spectrum, s=fft_shape)
        return result[tuple(slice(0, n) for n in self.domain.shape)]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply the operator to interior values (lexicographic order)."""
        u = np.zeros(self.domain.shape)
        u[self.domain.interior_mask] = x
        out = self.local_scale * _local_values(u, self.domain.spacing)
        if self.nonlocal_scale:
            out = out + self.nonlocal_scale * (self.kernel.diagonal * u - self._convolve(u))
        return out[self.domain.interior_mask]

    def as_linear_operator(self) -> LinearOperator:
        n = self.n_dof
        return LinearOperator((n, n), matvec=self.matvec, rmatvec=self.matvec, dtype=float)


def build_operator(
    d: GridDomain,
    s: float,
    local_scale: float = 1.0,
    nonlocal_scale: float = 1.0,
    kernel: FractionalKernel | None = None,
) -> MixedOperator:
    """
    Assemble the mixed operator on d.

    Args:
        d: Domain
        s: Fractional exponent
        local_scale: Weight of -Laplacian
        nonlocal_scale: Weight of (-Laplacian)^s
        kernel: Reuse a kernel built for a grid of the same spacing and sufficient reach

    Raises:
        OperatorError: On negative scales, an empty domain or a kernel that does not fit the grid
    """
    if local_scale < 0 or nonlocal_scale < 0:
        raise OperatorError(f"Operator scales must be nonnegative, got ({local_scale}, {nonlocal_scale})")
    if d.empty:
        raise OperatorError("Cannot build an operator on an empty domain")
    if kernel is None:
        kernel = build_kernel(s, d)
    else:
        needed = int(math.ceil(float(np.linalg.norm(np.asarray(d.shape) - 1))))
        if kernel.dim != d.dim or kernel.spacing != d.spacing:
            raise OperatorError("Kernel was built for a different grid")
        if kernel.reach < needed:
            raise OperatorError(f"Kernel reach {kernel.reach} is smaller than the bbox extent {needed}")
        if kernel.s != s:
            raise OperatorError(f"Kernel exponent {kernel.s} does not match s={s}")
    return MixedOperator(d, kernel, float(local_scale), float(nonlocal_scale))


def _check_field(op: MixedOperator, u: ScalarField):
    if u.domain is not op.domain and not (
        u.domain.same_grid(op.domain) and np.array_equal(u.domain.interior_mask, op.domain.interior_mask)
    ):
        raise OperatorError("Field does not live on the operator's domain")


def _local_values(u: np.ndarray, h: float) -> np.ndarray:
    padded = np.pad(u, 1)
    out = np.zeros_like(u)
    for axis in range(u.ndim):
        ahead = [slice(1, -1)] * u.ndim
        behind = [slice(1, -1)] * u.ndim
        ahead[axis] = slice(2, None)
        behind[axis] = slice(0, -2)
        out += 2.0 * u - padded[tuple(ahead)] - padded[tuple(behind)]
    return out / (h * h)


def _local_matrix(d: GridDomain) -> sp.csr_matrix:
    mask = d.interior_mask
    index = -np.ones(d.shape, dtype=np.int64)
    index[mask] = np.arange(d.n_interior)
    rows, cols, vals = [index[mask]], [index[mask]], [np.full(d.n_interior, 2.0 * d.dim)]
    for axis in range(d.dim):
        for step in (1, -1):
            neighbor = np.roll(index, -step, axis=axis)
            both = mask & (neighbor >= 0)
            rows.append(index[both])
            cols.append(neighbor[both])
            vals.append(-np.ones(int(np.count_nonzero(both))))
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(d.n_interior, d.n_interior),
    )
    return (matrix / (d.spacing * d.spacing)).tocsr()


def apply_local(op: MixedOperator, u: ScalarField) -> ScalarField:
    """3-point (1D) / 5-point (2D) -Laplacian with zero exterior values, restricted to the domain."""
    _check_field(op, u)
    out = _local_values(u.values, op.domain.spacing)
    return ScalarField(op.domain, np.where(op.domain.interior_mask, out, 0.0))


def apply_nonlocal(op: MixedOperator, u: ScalarField) -> ScalarField:
    """
    Direct evaluation of the fractional part by a loop over kernel offsets.

    Offsets are visited in lexicographic order; only offsets that connect two
    bbox cells contribute, the rest of the kernel mass enters through the
    diagonal.
    """
    _check_field(op, u)
    values = u.values
    shape = values.shape
    offsets, weights = op.kernel.offsets(tuple(n - 1 for n in shape))
    gathered = np.zeros(shape)
    for offset, w in zip(offsets, weights):
        dst = tuple(slice(max(0, -j), n - max(0, j)) for j, n in zip(offset, shape))
        src = tuple(slice(max(0, j), n + min(0, j)) for j, n in zip(offset, shape))
        gathered[dst] += w * values[src]
    out = op.kernel.diagonal * values - gathered
    return ScalarField(op.domain, np.where(op.domain.interior_mask, out, 0.0))


def apply_nonlocal_fast(op: MixedOperator, u: ScalarField) -> ScalarField:
    """Same contract as apply_nonlocal, using the cached kernel spectrum (two FFTs per call)."""
    _check_field(op, u)
    out = op.kernel.diagonal * u.values - op._convolve(u.values)
    return ScalarField(op.domain, np.where(op.domain.interior_mask, out, 0.0))


def apply_mixed(op: MixedOperator, u: ScalarField) -> ScalarField:
    """local_scale * apply_local + nonlocal_scale * apply_nonlocal (fast path)."""
    _check_field(op, u)
    out = op.local_scale * apply_local(op, u).values
    if op.nonlocal_scale:
        out = out + op.nonlocal_scale * apply_nonlocal_fast(op, u).values
    return ScalarField(op.domain, out)


def energy_forms(op: MixedOperator, u: ScalarField, v: ScalarField) -> EnergyForms:
    """
    Bilinear forms of the mixed operator.

    The local form sums forward-difference gradients over the bbox. The
    nonlocal form is split into the interaction of pairs inside the domain,
    the killing term for pairs leaving it, and the analytic tail:

        interaction = sum_x u v c - sum_x v (w * u)
        killing     = sum_x u v (W - c)
        tail        = tau * sum_x u v

    with c = w * 1_Omega and W the total table weight. Their sum equals
    <apply_nonlocal(u), v> by symmetry of the kernel.

    Returns:
        EnergyForms(local, nonlocal_, total) with total = local_scale*local + nonlocal_scale*nonlocal_
    """
    _check_field(op, u)
    _check_field(op, v)
    h = op.domain.spacing
    cell = op.domain.cell_volume

    local = 0.0
    for axis in range(op.domain.dim):
        local += float(np.sum(np.diff(u.values, axis=axis) * np.diff(v.values, axis=axis)))
    local *= cell / (h * h)

    uv = u.values * v.values
    coverage = op.domain_coverage
    interaction = float(np.sum(uv * coverage)) - float(np.sum(v.values * op._convolve(u.values)))
    killing = float(np.sum(uv * (op.kernel.total_weight - coverage)))
    tail = op.kernel.tail_coeff * float(np.sum(uv))
    nonlocal_ = (interaction + killing + tail) * cell

    total = op.local_scale * local + op.nonlocal_scale * nonlocal_
    return EnergyForms(local, nonlocal_, total)


def rayleigh_quotient(op: MixedOperator, u: ScalarField) -> float:
    """D(u) / (sum u^2 h^n)."""
    mass = u.inner(u)
    if mass == 0.0:
        raise OperatorError("Rayleigh quotient of the zero field")
    return energy_forms(op, u, u).total / mass
