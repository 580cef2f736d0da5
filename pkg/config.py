"""
Mixed Operator Lab Configuration

This module contains all configuration settings, constants, and defaults
for the mixed local/nonlocal eigenvalue laboratory.
"""

import math

# Experiment Registry
EXPERIMENTS = (
    "eig",
    "fk-sweep",
    "stability",
    "superlevel",
    "level-profile",
    "scaling",
    "counterexample",
    "hopf",
)

# Row schema versions, bumped whenever a column is added, renamed or dropped
SCHEMA_VERSIONS = {
    "eig": 1,
    "fk-sweep": 1,
    "stability": 1,
    "superlevel": 1,
    "level-profile": 1,
    "scaling": 1,
    "counterexample": 1,
    "hopf": 1,
}

# Exit Codes
EXIT_OK = 0
EXIT_ASSERTION = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 64

# Grid Construction
MIN_MARGIN_CELLS = 1
MARGIN_DIAMETER_FRACTION = 0.1  # exterior collar as a fraction of the shape diameter
PERIMETER_SMOOTHING_CELLS = 1.0  # Gaussian sigma applied before marching squares; 0 disables
DEFAULT_BOUNDARY_SAMPLES = 64

# Kernel Quadrature
NEAR_FIELD_GAUSS_ORDER = 16  # tensor Gauss-Legendre order on the 8 cells touching the origin

# Eigen Solver
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 500
CG_TOL_FACTOR = 0.1  # inner CG tolerance relative to the outer tolerance
CG_MAX_ITER = 2000
NEGATIVE_CELL_TOL = 1e-12  # relative to max |u0|; smaller negatives are roundoff

# Harness Defaults
DEFAULT_S = 0.25
DEFAULT_SCALES = (1.0, 1.0)
DEFAULT_THREADS = 1
LEVEL_PROFILE_LEVELS = 64
POLYA_SZEGO_SLACK = 0.02
SCALING_SLACK = 0.01
NOISE_FLOOR_FACTOR = 2.0
CONVEXITY_H_FACTOR = 5.0  # discrete convexity threshold is 1 - CONVEXITY_H_FACTOR * h
EXTRAPOLATION_S = 0.5  # runs with s >= this are flagged as extrapolation
DEFAULT_SCALING_FACTORS = (0.5, 0.75, 1.0)
DEFAULT_SUPERLEVEL_DELTAS = 24

# Convex Geometry
DISK_POLYGON_VERTICES = 2048
POLYGON_SEED = 20240101
CONTAINMENT_TOL = 1e-12
BONNESEN_TOL = 1e-12
BONNESEN_TRIALS = 200
HULL_DELTAS = (1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5, 1e-4)
BUMP_DELTAS = (1e-2, 10 ** -2.5, 1e-3)
EXPONENT_TARGET = 2.0 / 3.0  # 2/(n+1) at n = 2
EXPONENT_TOL = 0.1
BUMP_SAMPLES = 4096
ADDI_TRIALS = 200
ADDI_EPS_GRID = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)

# Unit-ball constants: |B_1| and the unit-sphere measure sigma_{n-1}
UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi}
UNIT_SPHERE_MEASURE = {1: 2.0, 2: 2.0 * math.pi}

# Output
CSV_TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"
OUTPUT_TIMEZONE = "UTC"
