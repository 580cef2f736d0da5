"""Tests for the Schwarz rearrangement and the Polya-Szego energy report."""

import numpy as np
import pytest

from errors import GridError
from numerics.eigsolve import principal_eigenpair
from numerics.gridcore import ScalarField, ShapeSpec, build_grid_domain, distance_transform
from numerics.mixedop import build_operator
from numerics.rearrange import polya_szego_report, schwarz_rearrange, value_checksum


def radial_distances(field):
    d = field.domain
    offsets = d.cell_centers() - d.center
    # rounded so that exact distance ties compare equal
    return np.round(np.linalg.norm(offsets, axis=-1) / d.spacing, 9)


class TestSchwarzRearrange:
    def test_equimeasurable(self, small_disk, rng):
        u = ScalarField(small_disk, np.where(small_disk.interior_mask, rng.uniform(0.1, 1.0, small_disk.shape), 0.0))
        rearranged = schwarz_rearrange(u)
        assert rearranged.n_cells == small_disk.n_interior
        assert np.array_equal(
            np.sort(rearranged.values.values[rearranged.values.values > 0]),
            np.sort(u.values[u.values > 0]),
        )
        assert value_checksum(rearranged.values) == rearranged.value_multiset_checksum
        moved = np.sort(rearranged.values.values[rearranged.values.values > 0])
        source = np.sort(u.values[u.values > 0])
        assert np.sum(moved) == np.sum(source)
        assert np.sum(moved ** 2) == np.sum(source ** 2)

    def test_idempotent(self):
        d = build_grid_domain(ShapeSpec.ellipse(1.5, 0.5), 1.0 / 16.0)
        once = schwarz_rearrange(distance_transform(d))
        twice = schwarz_rearrange(once.values)
        assert twice.ball_domain.shape == once.ball_domain.shape
        assert np.array_equal(twice.ball_domain.interior_mask, once.ball_domain.interior_mask)
        assert np.array_equal(twice.values.values, once.values.values)


    def test_radially_non_increasing(self):
        d = build_grid_domain(ShapeSpec.ellipse(1.5, 0.5), 1.0 / 16.0)
        rearranged = schwarz_rearrange(distance_transform(d))
        field = rearranged.values
        r = radial_distances(field)[field.domain.interior_mask]
        v = field.interior_values()
        order = np.argsort(r, kind="stable")
        assert np.all(np.diff(v[order]) <= 0.0)

    def test_ball_is_centered_and_collared(self):
        d = build_grid_domain(ShapeSpec.polygon([[0, 0], [3, 0], [3, 0.5], [0, 0.5]]), 1.0 / 8.0)
        ball = schwarz_rearrange(distance_transform(d)).ball_domain
        mask = ball.interior_mask
        assert not mask[0].any() and not mask[-1].any()
        assert np.allclose(ball.center, d.center)

    def test_one_dimensional(self):
        d = build_grid_domain(ShapeSpec.intervals([(0.0, 1.0), (2.0, 2.5)]), 1.0 / 16.0)
        rearranged = schwarz_rearrange(distance_transform(d))
        idx = np.flatnonzero(rearranged.ball_domain.interior_mask)
        assert idx[-1] - idx[0] + 1 == rearranged.n_cells

    def test_negative_field_rejected(self, small_disk):
        values = np.where(small_disk.interior_mask, -1.0, 0.0)
        with pytest.raises(GridError):
            schwarz_rearrange(ScalarField(small_disk, values))

    def test_zero_field_rejected(self, small_disk):
        with pytest.raises(GridError):
            schwarz_rearrange(ScalarField.zeros(small_disk))


class TestPolyaSzego:
    @pytest.mark.parametrize(
        "spec",
        [
            ShapeSpec.disk(1.0),
            ShapeSpec.ellipse(1.5, 0.75),
            ShapeSpec.rectangle(2.0, 1.0),
            ShapeSpec.stadium(1.0, 0.5),
            ShapeSpec.polygon([[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]]),
        ],
    )
    def test_energies_do_not_grow(self, spec):
        op = build_operator(build_grid_domain(spec, 1.0 / 16.0), 0.25)
        pair = principal_eigenpair(op)
        report = polya_szego_report(op, pair.u0, lam_src=pair.lam)
        assert report.local_ok and report.nonlocal_ok
        assert report.chain_ok

    def test_checkerboard_loses_nonlocal_energy(self):
        d = build_grid_domain(ShapeSpec.rectangle(1.0, 1.0), 1.0 / 16.0)
        i, j = np.indices(d.shape)
        u = ScalarField(d, np.where(d.interior_mask, 1.0 + (i + j) % 2, 0.0))
        report = polya_szego_report(build_operator(d, 0.25), u)
        assert report.nonlocal_ast < report.nonlocal_src
        assert report.local_ast < report.local_src

    def test_disk_eigenfunction(self, disk_eigenpair):
        op, pair = disk_eigenpair
        report = polya_szego_report(op, pair.u0, lam_src=pair.lam)
        assert report.local_ok and report.nonlocal_ok
        assert not report.degenerate
        assert report.chain_ok
        assert report.ball_op.kernel is op.kernel

    def test_ellipse_eigenfunction(self, ellipse_eigenpair):
        op, pair = ellipse_eigenpair
        report = polya_szego_report(op, pair.u0, lam_src=pair.lam, solve_ball=True)
        assert report.local_ok and report.nonlocal_ok
        assert report.local_ast < report.local_src
        assert report.nonlocal_ast < report.nonlocal_src
        assert report.lam_ball < pair.lam
        assert report.chain_ok

    def test_single_cell_support_is_degenerate(self, small_disk):
        values = np.zeros(small_disk.shape)
        values[tuple(np.asarray(small_disk.shape) // 2)] = 1.0
        op = build_operator(small_disk, 0.25)
        report = polya_szego_report(op, ScalarField(small_disk, values))
        assert report.degenerate
        assert report.local_ok is None and report.nonlocal_ok is None
        assert report.as_row()["ps_degenerate"] is True
