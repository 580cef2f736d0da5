"""Tests for the principal eigenpair solver and the boundary normal-derivative trace."""

import math

import numpy as np
import pytest

from errors import GridError, OperatorError, SolverError
from numerics.eigsolve import EigenPair, normal_derivative_trace, principal_eigenpair, rayleigh_upper_bound
from numerics.gridcore import ScalarField, ShapeSpec, build_grid_domain, distance_transform
from numerics.mixedop import build_operator

BESSEL_J0_ZERO_SQUARED = 5.783185962946784


def discrete_interval_eigenvalue(h):
    """Exact smallest eigenvalue of the 3-point Laplacian with zero values at the first exterior centers."""
    return 2.0 / (h * h) * (1.0 - math.cos(math.pi * h / (1.0 + h)))


class TestLocalOracles:
    def test_interval_matches_discrete_closed_form(self):
        h = 1.0 / 1024.0
        op = build_operator(build_grid_domain(ShapeSpec.interval(0.0, 1.0), h), 0.25, 1.0, 0.0)
        pair = principal_eigenpair(op, tol=1e-9)
        assert pair.lam == pytest.approx(discrete_interval_eigenvalue(h), rel=1e-8)

    def test_interval_pi_squared(self):
        # cell-centered Dirichlet data sit half a cell outside each end, a 2h relative bias
        op = build_operator(build_grid_domain(ShapeSpec.interval(0.0, 1.0), 1.0 / 2048.0), 0.25, 1.0, 0.0)
        pair = principal_eigenpair(op)
        assert abs(pair.lam - math.pi ** 2) / math.pi ** 2 <= 1e-3

    def test_disk_coarse(self):
        op = build_operator(build_grid_domain(ShapeSpec.disk(1.0), 1.0 / 32.0), 0.25, 1.0, 0.0)
        pair = principal_eigenpair(op)
        assert pair.lam == pytest.approx(BESSEL_J0_ZERO_SQUARED, rel=6e-2)

    @pytest.mark.slow
    def test_disk_fine(self):
        op = build_operator(build_grid_domain(ShapeSpec.disk(1.0), 1.0 / 128.0), 0.25, 1.0, 0.0)
        pair = principal_eigenpair(op)
        assert abs(pair.lam - BESSEL_J0_ZERO_SQUARED) / BESSEL_J0_ZERO_SQUARED <= 2e-2


class TestPrincipalEigenpair:
    def test_converged_pair(self, disk_eigenpair):
        op, pair = disk_eigenpair
        assert pair.residual <= 1e-8
        assert pair.residual_history[-1] <= 1e-8
        assert len(pair.residual_history) == pair.iterations
        assert np.all(pair.u0.values >= 0.0)
        assert pair.u0.l2_norm() == pytest.approx(1.0)
        assert math.isfinite(pair.max_value) and pair.max_value > 0.0

    def test_residual_history_non_increasing(self, disk_eigenpair):
        _, pair = disk_eigenpair
        history = pair.residual_history
        assert len(history) >= 2
        assert all(later <= earlier for earlier, later in zip(history, history[1:]))

    def test_strictly_positive_on_interior(self, disk_eigenpair):
        _, pair = disk_eigenpair
        assert np.all(pair.u0.interior_values() > 0.0)
        assert pair.negative_cells == 0


    def test_rayleigh_bound_above_eigenvalue(self, disk_eigenpair):
        op, pair = disk_eigenpair
        trial = distance_transform(op.domain)
        assert rayleigh_upper_bound(op, trial) >= pair.lam
        assert rayleigh_upper_bound(op, pair.u0) == pytest.approx(pair.lam, rel=1e-7)

    def test_mixed_above_both_parts(self, disk_eigenpair):
        op, pair = disk_eigenpair
        local = principal_eigenpair(build_operator(op.domain, op.s, 1.0, 0.0, kernel=op.kernel))
        assert pair.lam > local.lam

    def test_translation_is_bit_identical(self, small_disk):
        lam = principal_eigenpair(build_operator(small_disk, 0.25)).lam
        moved = principal_eigenpair(build_operator(small_disk.shifted((3, -2)), 0.25)).lam
        assert moved == lam

    @pytest.mark.parametrize("s", [0.1, 0.25, 0.4])
    def test_form_domination(self, s):
        rng = np.random.default_rng(17)
        for _ in range(5):
            a, b = rng.uniform(0.5, 1.2, size=2)
            d = build_grid_domain(ShapeSpec.ellipse(a, b), 1.0 / 16.0)
            mixed = principal_eigenpair(build_operator(d, s))
            local = principal_eigenpair(build_operator(d, s, 1.0, 0.0))
            assert mixed.lam >= local.lam - (mixed.residual + local.residual + 1e-8) * local.lam

    def test_local_part_required(self, small_disk):
        with pytest.raises(OperatorError):
            principal_eigenpair(build_operator(small_disk, 0.25, 0.0, 1.0))

    def test_non_convergence(self, small_disk):
        with pytest.raises(SolverError) as info:
            principal_eigenpair(build_operator(small_disk, 0.25), tol=1e-15, max_iter=1)
        assert info.value.iterations == 1
        assert info.value.last_residual > 1e-15


class TestNormalDerivativeTrace:
    def test_disk_all_negative(self, disk_eigenpair):
        op, pair = disk_eigenpair
        trace = normal_derivative_trace(pair, op.domain, 32)
        assert len(trace.samples) == 32
        assert trace.valid_samples
        assert trace.fraction_negative == 1.0
        assert not trace.degenerate

    def test_square_all_negative(self):
        d = build_grid_domain(ShapeSpec.rectangle(2.0, 2.0), 1.0 / 16.0)
        pair = principal_eigenpair(build_operator(d, 0.25))
        trace = normal_derivative_trace(pair, d, 40)
        assert trace.n_skipped == 0
        assert trace.fraction_negative == 1.0

    def test_interval_endpoints(self, unit_interval):
        pair = principal_eigenpair(build_operator(unit_interval, 0.25))
        trace = normal_derivative_trace(pair, unit_interval)
        assert len(trace.samples) == 2
        assert trace.n_negative == 2

    def test_domain_without_shape(self, disk_eigenpair):
        op, pair = disk_eigenpair
        bare = op.domain.with_mask(op.domain.interior_mask)
        with pytest.raises(GridError):
            normal_derivative_trace(pair, bare)

    def test_zero_field_is_degenerate(self, small_disk):
        pair = EigenPair(1.0, ScalarField.zeros(small_disk), 0.0, 0)
        trace = normal_derivative_trace(pair, small_disk, 16)
        assert trace.valid_samples
        assert all(sample.derivative == 0.0 for sample in trace.samples)
        assert trace.degenerate

    def test_trace_on_another_grid(self, disk_eigenpair):
        _, pair = disk_eigenpair
        with pytest.raises(GridError):
            normal_derivative_trace(pair, build_grid_domain(ShapeSpec.disk(1.0), 1.0 / 16.0))

    def test_trace_on_shifted_domain(self, disk_eigenpair):
        op, pair = disk_eigenpair
        with pytest.raises(GridError):
            normal_derivative_trace(pair, op.domain.shifted((1, 0)))
