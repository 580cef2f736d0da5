"""Tests for shapes, rasterization, fields and grid measures."""

import math

import numpy as np
import pytest

from errors import GridError
from numerics.gridcore import (
    GridDomain,
    ScalarField,
    ShapeSpec,
    build_grid_domain,
    convexity_score,
    distance_transform,
    perimeter_estimate,
    superlevel_set,
    volume,
)

L_SHAPE = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]


class TestShapeSpec:
    def test_from_dict_fills_defaults(self):
        spec = ShapeSpec.from_dict({"kind": "disk", "radius": 2})
        assert spec.params["radius"] == 2.0
        assert spec.params["center"] == (0.0, 0.0)
        assert spec.dim == 2

    def test_to_dict_reads_back(self):
        spec = ShapeSpec.polygon(L_SHAPE)
        assert ShapeSpec.from_dict(spec.to_dict()).params == spec.params

    @pytest.mark.parametrize(
        "data",
        [
            {"kind": "disk", "radius": -1.0},
            {"kind": "interval", "a": 1.0, "b": 1.0},
            {"kind": "ellipse", "a": 1.0, "b": 0.0},
            {"kind": "polygon", "vertices": [[0, 0], [1, 1], [1, 0], [0, 1]]},
            {"kind": "perturbed_disk", "amplitude": 1.5, "mode": 2},
            {"kind": "hexagon"},
            {"kind": "ellipse", "a": 1.0},
        ],
    )
    def test_degenerate_shapes_rejected(self, data):
        with pytest.raises(GridError):
            ShapeSpec.from_dict(data)

    def test_contains_is_open(self):
        spec = ShapeSpec.interval(0.0, 1.0)
        inside = spec.contains(np.array([[0.0], [0.5], [1.0]]))
        assert inside.tolist() == [False, True, False]

    def test_disk_normals_are_radial(self):
        points, normals = ShapeSpec.disk(2.0).boundary_samples(16)
        assert np.allclose(normals, points / 2.0)

    def test_rectangle_samples_avoid_corners(self):
        points, normals = ShapeSpec.rectangle(2.0, 2.0).boundary_samples(40)
        assert np.all(np.linalg.norm(normals, axis=1) == pytest.approx(1.0))
        assert np.all(np.min(np.abs(np.abs(points) - 1.0), axis=1) < 1e-12)
        assert np.all(np.max(np.abs(points), axis=1) <= 1.0)
        assert not np.any(np.all(np.abs(points) > 0.85, axis=1))

    def test_scaled_and_translated(self):
        spec = ShapeSpec.ellipse(2.0, 1.0, (1.0, 0.0))
        scaled = spec.scaled(0.5)
        assert scaled.params["a"] == 1.0 and scaled.params["center"] == (0.5, 0.0)
        moved = spec.translated((0.0, 3.0))
        assert moved.params["center"] == (1.0, 3.0)


class TestBuildGridDomain:
    def test_interval_cells(self):
        d = build_grid_domain(ShapeSpec.interval(0.0, 1.0), 1.0 / 8.0)
        assert d.n_interior == 8
        assert volume(d) == pytest.approx(1.0)
        assert not d.interior_mask[0] and not d.interior_mask[-1]

    def test_disk_volume(self):
        d = build_grid_domain(ShapeSpec.disk(1.0), 1.0 / 32.0)
        assert volume(d) == pytest.approx(math.pi, rel=2e-2)

    def test_collar_is_exterior(self, small_disk):
        mask = small_disk.interior_mask
        assert not mask[0].any() and not mask[-1].any()
        assert not mask[:, 0].any() and not mask[:, -1].any()

    def test_zero_measure_on_grid(self):
        with pytest.raises(GridError):
            build_grid_domain(ShapeSpec.disk(0.01), 0.5)

    def test_nonpositive_spacing(self):
        with pytest.raises(GridError):
            build_grid_domain(ShapeSpec.disk(1.0), 0.0)

    def test_mask_touching_bbox_rejected(self):
        with pytest.raises(GridError):
            GridDomain(1, 0.1, (0.0,), np.array([True, True, False]))

    def test_shifted_keeps_mask(self, small_disk):
        moved = small_disk.shifted((3, -2))
        assert np.array_equal(moved.interior_mask, small_disk.interior_mask)
        assert moved.origin[0] == pytest.approx(small_disk.origin[0] + 3 * small_disk.spacing)
        assert moved.spec.params["center"] == pytest.approx((3 / 16, -2 / 16))

    def test_pgm_header(self, small_disk):
        text = small_disk.to_pgm()
        width, height = small_disk.shape
        assert text.startswith(f"P2\n{width} {height}\n255\n")


class TestScalarField:
    def test_nonzero_exterior_rejected(self, unit_interval):
        values = np.ones(unit_interval.shape)
        with pytest.raises(GridError):
            ScalarField(unit_interval, values)

    def test_non_finite_rejected(self, unit_interval):
        values = np.where(unit_interval.interior_mask, np.nan, 0.0)
        with pytest.raises(GridError):
            ScalarField(unit_interval, values)

    def test_inner_product(self, unit_interval):
        u = ScalarField.from_function(unit_interval, lambda x: np.ones(x.shape[:-1]))
        assert u.inner(u) == pytest.approx(1.0)
        assert (u + u).l2_norm() == pytest.approx(2.0)


class TestPerimeter:
    def test_disk_perimeter(self):
        d = build_grid_domain(ShapeSpec.disk(1.0), 1.0 / 64.0)
        assert perimeter_estimate(d) == pytest.approx(2.0 * math.pi, rel=2e-2)

    def test_unit_square(self):
        d = build_grid_domain(ShapeSpec.rectangle(1.0, 1.0), 1.0 / 64.0)
        assert perimeter_estimate(d) == pytest.approx(4.0, rel=2e-2)

    def test_interval_endpoints(self, unit_interval):

        assert perimeter_estimate(unit_interval) == 2.0

    def test_two_intervals(self):
        d = build_grid_domain(ShapeSpec.intervals([(0.0, 1.0), (2.0, 3.0)]), 1.0 / 16.0)
        assert perimeter_estimate(d) == 4.0


class TestLevelSetsAndDistance:
    def test_superlevel_set_shrinks(self, unit_interval):
        u = ScalarField.from_function(unit_interval, lambda x: np.sin(math.pi * x[..., 0]))
        assert volume(superlevel_set(u, 0.5)) < volume(superlevel_set(u, 0.1))

    def test_empty_superlevel_set_is_flagged(self, unit_interval):
        u = ScalarField.from_function(unit_interval, lambda x: np.sin(math.pi * x[..., 0]))
        level = superlevel_set(u, 2.0)
        assert level.empty
        assert volume(level) == 0.0
        assert perimeter_estimate(level) == 0.0

    def test_negative_threshold(self, unit_interval):
        with pytest.raises(GridError):
            superlevel_set(ScalarField.zeros(unit_interval), -0.1)

    def test_superlevel_sets_are_nested(self, small_disk):
        u = distance_transform(small_disk)
        levels = np.linspace(0.0, float(np.max(u.values)), 9)
        for low, high in zip(levels, levels[1:]):
            inner = superlevel_set(u, high).interior_mask
            outer = superlevel_set(u, low).interior_mask
            assert np.all(outer[inner])
        assert volume(superlevel_set(u, 0.0)) == volume(small_disk)

    def test_distance_transform_unit_square(self):
        h = 1.0 / 10.0
        distance = distance_transform(build_grid_domain(ShapeSpec.rectangle(1.0, 1.0), h)).values
        assert np.max(distance) == pytest.approx(0.5, abs=h)
        for axis in range(2):
            assert np.all(np.abs(np.diff(distance, axis=axis)) <= h * math.sqrt(2.0) + 1e-12)


    def test_distance_transform_interval(self):
        d = build_grid_domain(ShapeSpec.interval(0.0, 1.0), 1.0 / 8.0)
        distance = distance_transform(d)
        assert np.max(distance.values) == pytest.approx(4.0 / 8.0)
        assert np.min(distance.interior_values()) == pytest.approx(1.0 / 8.0)


class TestConvexityScore:
    def test_disk_is_discretely_convex(self):
        h = 1.0 / 32.0
        d = build_grid_domain(ShapeSpec.disk(1.0), h)
        assert convexity_score(d) >= 1.0 - 5.0 * h

    def test_l_shape_hull_ratio(self):
        d = build_grid_domain(ShapeSpec.polygon(L_SHAPE), 1.0 / 32.0)
        assert convexity_score(d) == pytest.approx(3.0 / 3.5, rel=2e-2)

    def test_interval_union_gap(self):
        d = build_grid_domain(ShapeSpec.intervals([(0.0, 1.0), (2.0, 3.0)]), 1.0 / 16.0)
        assert convexity_score(d) == pytest.approx(2.0 / 3.0, rel=5e-2)
