"""Shared fixtures for the Mixed Operator Lab test suite."""

import numpy as np
import pytest

from config import POLYGON_SEED
from numerics.eigsolve import principal_eigenpair
from numerics.gridcore import ShapeSpec, build_grid_domain
from numerics.mixedop import build_operator


@pytest.fixture
def rng():
    return np.random.default_rng(POLYGON_SEED)


@pytest.fixture
def unit_interval():
    return build_grid_domain(ShapeSpec.interval(0.0, 1.0), 1.0 / 64.0)


@pytest.fixture
def small_disk():
    return build_grid_domain(ShapeSpec.disk(1.0), 1.0 / 16.0)


@pytest.fixture(scope="module")
def disk_eigenpair():
    """Mixed operator (s = 0.25) on the unit disk at h = 1/24 with its principal eigenpair."""
    d = build_grid_domain(ShapeSpec.disk(1.0), 1.0 / 24.0)
    op = build_operator(d, 0.25)
    return op, principal_eigenpair(op)


@pytest.fixture(scope="module")
def ellipse_eigenpair():
    d = build_grid_domain(ShapeSpec.ellipse(1.5, 0.75), 1.0 / 24.0)
    op = build_operator(d, 0.25)
    return op, principal_eigenpair(op)
