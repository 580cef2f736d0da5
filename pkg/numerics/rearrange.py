"""
Rearrangement

Discrete decreasing Schwarz symmetrization of nonnegative grid fields and the
energy comparisons that go with it.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import DEFAULT_MAX_ITER, DEFAULT_TOL, POLYA_SZEGO_SLACK
from errors import GridError
from numerics.eigsolve import principal_eigenpair
from numerics.gridcore import GridDomain, ScalarField
from numerics.mixedop import MixedOperator, build_operator, energy_forms, rayleigh_quotient

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RearrangedField:
    """
    Decreasing rearrangement of a field onto a ball of equal cell count.

    Attributes:
        ball_domain: Cells nearest to the source bbox center, as many as the source support
        values: Rearranged field on ball_domain
        value_multiset_checksum: sha256 of the sorted positive source values
    """

    ball_domain: GridDomain
    values: ScalarField
    value_multiset_checksum: str

    @property
    def n_cells(self) -> int:
        return self.ball_domain.n_interior


def value_checksum(u: ScalarField) -> str:
    """Order-independent digest of the positive values of a field."""
    values = np.sort(u.values[u.values > 0.0])
    return hashlib.sha256(values.tobytes()).hexdigest()


def _ball_layout(d: GridDomain, count: int):
    """Bbox size per axis, with the source parity, large enough for a ball of count cells."""
    if d.dim == 1:
        radius_cells = count / 2.0
    else:
        radius_cells = math.sqrt(count / math.pi)
    base = 2 * (int(math.ceil(radius_cells)) + 2)
    return tuple(base + ((n - base) % 2) for n in d.shape)


def schwarz_rearrange(u: ScalarField) -> RearrangedField:
    """
    Sort the positive values of u in decreasing order onto the cells nearest
    the center of u's bounding box.

    Cells are ranked by exact squared distance to the center, ties broken by
    lexicographic cell order.

    Raises:
        GridError: If u has negative values or no positive value
    """
    if np.any(u.values < 0.0):
        raise GridError("Schwarz rearrangement needs a nonnegative field")
    positive = u.values[u.values > 0.0]
    count = positive.size
    if count == 0:
        raise GridError("Schwarz rearrangement of the zero field")

    d = u.domain
    h = d.spacing
    shape = _ball_layout(d, count)
    while True:
        # doubled integer offsets from the center keep distance ties exact
        doubled = np.meshgrid(*[2 * np.arange(n) + 1 - n for n in shape], indexing="ij")
        dist2 = sum(o.astype(np.int64) ** 2 for o in doubled).ravel()
        order = np.lexsort((np.arange(dist2.size), dist2))
        mask = np.zeros(dist2.size, dtype=bool)
        mask[order[:count]] = True
        mask = mask.reshape(shape)
        touches = any(np.take(mask, 0, axis=a).any() or np.take(mask, -1, axis=a).any() for a in range(d.dim))
        if not touches:
            break
        shape = tuple(n + 2 for n in shape)

    values = np.zeros(int(np.prod(shape)))
    values[order[:count]] = np.sort(positive)[::-1]
    origin = tuple(d.center - 0.5 * h * np.asarray(shape))
    ball = GridDomain(d.dim, h, origin, mask)
    field = ScalarField(ball, values.reshape(shape))
    return RearrangedField(ball, field, value_checksum(u))


@dataclass(frozen=True, eq=False)
class PolyaSzegoReport:
    """
    Energies of a field and of its rearrangement.

    ok flags are None when the support is a single cell and the comparison
    is skipped. Rayleigh-quotient chain fields are None unless requested.
    """

    local_src: float
    local_ast: float
    nonlocal_src: float
    nonlocal_ast: float
    local_ok: Optional[bool]
    nonlocal_ok: Optional[bool]
    degenerate: bool
    rearranged: RearrangedField
    ball_op: MixedOperator
    rq_src: float
    rq_ast: float
    lam_src: Optional[float] = None
    lam_ball: Optional[float] = None
    chain_ok: Optional[bool] = None

    def as_row(self) -> dict:
        return {
            "local_src": self.local_src,
            "local_ast": self.local_ast,
            "nonlocal_src": self.nonlocal_src,
            "nonlocal_ast": self.nonlocal_ast,
            "local_ok": self.local_ok,
            "nonlocal_ok": self.nonlocal_ok,
            "ps_degenerate": self.degenerate,
            "rq_src": self.rq_src,
            "rq_ast": self.rq_ast,
            "lam_ball": self.lam_ball,
            "chain_ok": self.chain_ok,
        }


def polya_szego_report(
    op_src: MixedOperator,
    u: ScalarField,
    slack: float = POLYA_SZEGO_SLACK,
    lam_src: Optional[float] = None,
    solve_ball: bool = False,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PolyaSzegoReport:
    """
    Compare local and nonlocal energies of u and u* with a relative slack.

    The operator on the ball domain reuses op_src's kernel whenever its reach
    covers the ball's bounding box, so both energies use identical weights.

    Args:
        op_src: Operator on u's domain
        u: Nonnegative, nonzero field
        slack: Relative tolerance for the comparisons
        lam_src: Principal eigenvalue on the source domain, for the quotient chain
        solve_ball: Also compute the principal eigenvalue on the ball domain
        tol, max_iter: Solver settings used when solve_ball is set
    """
    rearranged = schwarz_rearrange(u)
    ball = rearranged.ball_domain
    needed = int(math.ceil(float(np.linalg.norm(np.asarray(ball.shape) - 1))))
    kernel = op_src.kernel if op_src.kernel.reach >= needed else None
    ball_op = build_operator(ball, op_src.s, op_src.local_scale, op_src.nonlocal_scale, kernel=kernel)

    src = energy_forms(op_src, u, u)
    ast = energy_forms(ball_op, rearranged.values, rearranged.values)
    degenerate = rearranged.n_cells <= 1
    if degenerate:
        logger.warning("Rearrangement support is a single cell; energy comparisons skipped")
        local_ok = nonlocal_ok = None
    else:
        local_ok = bool(ast.local <= src.local * (1.0 + slack))
        nonlocal_ok = bool(ast.nonlocal_ <= src.nonlocal_ * (1.0 + slack))

    rq_src = rayleigh_quotient(op_src, u)
    rq_ast = rayleigh_quotient(ball_op, rearranged.values)
    lam_ball = principal_eigenpair(ball_op, tol, max_iter).lam if solve_ball else None
    chain_ok = None
    if lam_src is not None or lam_ball is not None:
        chain_ok = True
        if lam_src is not None:
            chain_ok = chain_ok and lam_src >= rq_ast * (1.0 - slack)
        if lam_ball is not None:
            chain_ok = chain_ok and rq_ast >= lam_ball * (1.0 - slack)

    return PolyaSzegoReport(
        local_src=src.local,
        local_ast=ast.local,
        nonlocal_src=src.nonlocal_,
        nonlocal_ast=ast.nonlocal_,
        local_ok=local_ok,
        nonlocal_ok=nonlocal_ok,
        degenerate=degenerate,
        rearranged=rearranged,
        ball_op=ball_op,
        rq_src=rq_src,
        rq_ast=rq_ast,
        lam_src=lam_src,
        lam_ball=lam_ball,
        chain_ok=chain_ok,
    )
