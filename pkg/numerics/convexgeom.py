"""
Convex Geometry

Exact planar convex geometry used by the stability checks: inscribed and
enclosing balls, the concentric ball sandwich with its cone bound, the
Bonnesen deficit, and the two counterexample families (convex hull of the unit
disk and an outside point, and the radial bump body) with curvature.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from config import (
    BUMP_SAMPLES,
    CONTAINMENT_TOL,
    DISK_POLYGON_VERTICES,
    POLYGON_SEED,
)
from errors import GeometryError
from numerics.gridcore import ShapeSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Strictly convex polygon with vertices in counter-clockwise order."""

    vertices: np.ndarray

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
            raise GeometryError("A convex polygon needs at least 3 planar vertices")
        edges = np.roll(vertices, -1, axis=0) - vertices
        if np.any(np.all(edges == 0.0, axis=1)):
            raise GeometryError("Polygon has repeated vertices")
        turns = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        if not np.all(turns > 0.0):
            raise GeometryError("Polygon is not strictly convex in counter-clockwise order")
        vertices.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "ConvexPolygon":
        """Convex hull of a point cloud."""
        try:
            hull = ConvexHull(np.asarray(points, dtype=float))
        except (QhullError, ValueError) as e:
            raise GeometryError(f"Convex hull failed: {str(e)}") from e
        # qhull lists 2D hull vertices counter-clockwise
        return cls(hull.points[hull.vertices])

    @classmethod
    def regular(cls, count: int, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0)) -> "ConvexPolygon":
        """Regular polygon inscribed in the circle of the given radius."""
        angles = 2.0 * math.pi * np.arange(count) / count
        return cls(np.asarray(center) + radius * np.stack([np.cos(angles), np.sin(angles)], axis=-1))

    @property
    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unit outward normals and offsets (normal . x <= offset) of every edge."""
        a = self.vertices
        d = np.roll(a, -1, axis=0) - a
        normals = np.stack([d[:, 1], -d[:, 0]], axis=-1)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        return normals, np.einsum("ij,ij->i", normals, a)

    def to_spec(self) -> ShapeSpec:
        return ShapeSpec.polygon(self.vertices.tolist())


@dataclass(frozen=True)
class Ball:
    center: Tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError(f"Ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    def contains(self, points: np.ndarray, tol: float = CONTAINMENT_TOL) -> np.ndarray:
        distance = np.linalg.norm(np.atleast_2d(points) - np.asarray(self.center), axis=1)
        return distance <= self.radius * (1.0 + tol)


@dataclass(frozen=True)
class SandwichCertificate:
    """
    Concentric inner/outer balls around a convex polygon.

    Attributes:
        inner: Ball inside the polygon
        outer: Concentric ball containing the polygon
        delta: Farthest vertex distance minus the inner radius
        eps_in: 1 - |inner| / |polygon|
        outer_defect: 1 - |polygon| / |outer|
        cone_r: Base half-width of the tangent cone from the farthest vertex
        cone_volume_bound: Area r * delta of that cone, a lower bound for |polygon \\ inner|
        excess_area: |polygon| - |inner|
        cone_ok: excess_area >= cone_volume_bound
        far_point: Farthest vertex
    """

    inner: Ball
    outer: Ball
    delta: float
    eps_in: float
    outer_defect: float
    cone_r: float
    cone_volume_bound: float
    excess_area: float
    cone_ok: bool
    far_point: Tuple[float, float]


@dataclass(frozen=True)
class HullRecord:
    delta: float
    PT: float
    added_area: float
    polygon_area: float
    area_error: float


def area(p: ConvexPolygon) -> float:
    """Shoelace area."""
    x, y = p.vertices[:, 0], p.vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def perimeter(p: ConvexPolygon) -> float:
    return float(np.sum(np.linalg.norm(np.roll(p.vertices, -1, axis=0) - p.vertices, axis=1)))


def chebyshev_inball(p: ConvexPolygon) -> Ball:
    """
    Largest inscribed ball.

    Solves max r subject to n_i . x + r <= b_i over the edge half-planes with
    HiGHS, then takes the radius as the exact minimum distance from the
    optimal center to the edge lines.
    """
    normals, offsets = p.edges
    c = np.array([0.0, 0.0, -1.0])
    A_ub = np.hstack((normals, np.ones((len(normals), 1))))
    res = linprog(c, A_ub=A_ub, b_ub=offsets, bounds=[(None, None), (None, None), (0.0, None)], method="highs")
    if res.status != 0:
        raise GeometryError(f"Chebyshev center LP failed, status {res.status}: {res.message}")
    center = res.x[:2]
    radius = float(np.min(offsets - normals @ center))
    return Ball(tuple(center), radius)


def _circle_contains(circle, point) -> bool:
    cx, cy, r = circle
    return math.hypot(point[0] - cx, point[1] - cy) <= r * (1.0 + CONTAINMENT_TOL) + CONTAINMENT_TOL


def _diameter_circle(a, b):
    cx, cy = (a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0
    return (cx, cy, max(math.hypot(cx - a[0], cy - a[1]), math.hypot(cx - b[0], cy - b[1])))


def _circumcircle(a, b, c):
    ox = (min(a[0], b[0], c[0]) + max(a[0], b[0], c[0])) / 2.0
    oy = (min(a[1], b[1], c[1]) + max(a[1], b[1], c[1])) / 2.0
    ax, ay = a[0] - ox, a[1] - oy
    bx, by = b[0] - ox, b[1] - oy
    cx, cy = c[0] - ox, c[1] - oy
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    x = ox + ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    y = oy + ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    r = max(math.hypot(x - a[0], y - a[1]), math.hypot(x - b[0], y - b[1]), math.hypot(x - c[0], y - c[1]))
    return (x, y, r)


def _cross(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _circle_two(points, p, q):
    circle = _diameter_circle(p, q)
    left = right = None
    for r in points:
        if _circle_contains(circle, r):
            continue
        cross = _cross(p[0], p[1], q[0], q[1], r[0], r[1])
        candidate = _circumcircle(p, q, r)
        if candidate is None:
            continue
        side = _cross(p[0], p[1], q[0], q[1], candidate[0], candidate[1])
        if cross > 0.0 and (left is None or side > _cross(p[0], p[1], q[0], q[1], left[0], left[1])):
            left = candidate
        elif cross < 0.0 and (right is None or side < _cross(p[0], p[1], q[0], q[1], right[0], right[1])):
            right = candidate
    if left is None and right is None:
        return circle
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def _circle_one(points, p):
    circle = (p[0], p[1], 0.0)
    for i, q in enumerate(points):
        if not _circle_contains(circle, q):
            if circle[2] == 0.0:
                circle = _diameter_circle(p, q)
            else:
                circle = _circle_two(points[: i + 1], p, q)
    return circle


def min_enclosing_ball(p: ConvexPolygon, seed: int = POLYGON_SEED) -> Ball:
    """Smallest circle containing every vertex (randomized incremental, seeded shuffle)."""
    shuffled = [tuple(v) for v in p.vertices.tolist()]
    random.Random(seed).shuffle(shuffled)
    circle = None
    for i, point in enumerate(shuffled):
        if circle is None or not _circle_contains(circle, point):
            circle = _circle_one(shuffled[: i + 1], point)
    return Ball((circle[0], circle[1]), circle[2])


def ball_sandwich(p: ConvexPolygon, inner: Ball) -> SandwichCertificate:
    """
    Concentric outer ball from an inscribed ball.

    The outer radius is the farthest vertex distance R + delta. The tangent
    cone from the farthest vertex to the inner ball cuts a triangle of area
    r * delta with r = delta R / sqrt((R + delta)^2 - R^2) out of the region
    between the two.

    Raises:
        GeometryError: If the inner ball is not contained in the polygon
    """
    normals, offsets = p.edges
    center = np.asarray(inner.center)
    R = inner.radius
    clearance = offsets - normals @ center
    if np.any(clearance < R - CONTAINMENT_TOL * max(1.0, R)):
        raise GeometryError("Inner ball is not contained in the polygon")

    distances = np.linalg.norm(p.vertices - center, axis=1)
    k = int(np.argmax(distances))
    delta = max(0.0, float(distances[k]) - R)
    outer = Ball(inner.center, R + delta)
    omega = area(p)
    cone_r = delta * R / math.sqrt((R + delta) ** 2 - R ** 2) if delta > 0.0 else 0.0
    cone_bound = cone_r * delta
    excess = omega - inner.area
    return SandwichCertificate(
        inner=inner,
        outer=outer,
        delta=delta,
        eps_in=1.0 - inner.area / omega,
        outer_defect=1.0 - omega / outer.area,
        cone_r=cone_r,
        cone_volume_bound=cone_bound,
        excess_area=excess,
        cone_ok=bool(excess >= cone_bound - CONTAINMENT_TOL * omega),
        far_point=tuple(p.vertices[k]),
    )


def bonnesen_deficit(p: ConvexPolygon, inball: Optional[Ball] = None) -> Tuple[float, float]:
    """
    Both sides of the planar Bonnesen-type inequality lhs >= rhs:

        lhs = (P / P_B)^2 - A / A_B,   rhs = (P / P_B - 1)^2

    with B the Chebyshev inball (computed when not given).
    """
    if inball is None:
        inball = chebyshev_inball(p)
    ratio = perimeter(p) / inball.perimeter
    lhs = ratio ** 2 - area(p) / inball.area
    rhs = (ratio - 1.0) ** 2
    return lhs, rhs


def hull_counterexample(delta: float, arc_vertices: int = DISK_POLYGON_VERTICES) -> Tuple[ConvexPolygon, HullRecord]:
    """
    Convex hull of the unit disk and P = (0, 1 + delta).

    The long arc between the two tangent points is replaced by a polygon
    circumscribed with arc_vertices tangent lines, so the unit disk stays inside
    and P remains the farthest vertex.

    Returns:
        (polygon, HullRecord with the tangent length PT, the closed-form added
        area PT - arccos(1 / (1 + delta)) and the polygonization error)

    Raises:
        GeometryError: If delta is not in (0, 1)
    """
    if not 0.0 < delta < 1.0:
        raise GeometryError(f"Hull counterexample needs 0 < delta < 1, got {delta}")
    beta = math.acos(1.0 / (1.0 + delta))
    pt = math.sqrt(2.0 * delta + delta * delta)
    added = pt - beta

    step = (2.0 * math.pi - 2.0 * beta) / arc_vertices
    phi = math.pi / 2.0 + beta + step * (np.arange(arc_vertices) + 0.5)
    radius = 1.0 / math.cos(step / 2.0)
    arc = radius * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    vertices = np.vstack([[0.0, 1.0 + delta], arc])
    polygon = ConvexPolygon(vertices)
    polygon_area = area(polygon)
    record = HullRecord(
        delta=delta,
        PT=pt,
        added_area=added,
        polygon_area=polygon_area,
        area_error=polygon_area - (math.pi + added),
    )
    return polygon, record


# Bump profile f(x) = exp(1 - 1/(1 - x^2)) on (-1, 1), zero elsewhere


def bump(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, x, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)


def bump_d1(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, x, 0.0)
    q1 = -2.0 * safe / (1.0 - safe * safe) ** 2
    return np.where(inside, bump(safe) * q1, 0.0)


def bump_d2(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1.0
    safe = np.where(inside, x, 0.0)
    w = 1.0 - safe * safe
    q1 = -2.0 * safe / w ** 2
    q2 = -(2.0 + 6.0 * safe * safe) / w ** 3
    return np.where(inside, bump(safe) * (q1 * q1 + q2), 0.0)


def bump_c2_norm(points: int = 200001) -> float:
    """sup|f| + sup|f'| + sup|f''| on a dense grid of (-1, 1)."""
    x = np.linspace(-1.0, 1.0, points)[1:-1]
    return float(np.max(np.abs(bump(x))) + np.max(np.abs(bump_d1(x))) + np.max(np.abs(bump_d2(x))))


@dataclass(frozen=True, eq=False)
class RadialBody:
    """
    Star-shaped body rho < g(theta), g = base + c delta f(theta / sqrt(delta)).

    Attributes:
        delta: Bump height scale; 0 gives the circle of radius base
        c: Bump amplitude factor
        f_c2_norm: C^2 norm of the bump profile used to set c
        samples: Number of uniform theta samples on [-pi, pi)
        base: Radius away from the bump
    """

    delta: float
    c: float
    f_c2_norm: float
    samples: int = BUMP_SAMPLES
    base: float = 1.0

    @classmethod
    def circle(cls, radius: float, samples: int = BUMP_SAMPLES) -> "RadialBody":
        return cls(0.0, 0.0, 0.0, samples, radius)

    @property
    def theta(self) -> np.ndarray:
        return -math.pi + 2.0 * math.pi * np.arange(self.samples) / self.samples

    def g(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.delta == 0.0:
            return np.full(theta.shape, self.base)
        return self.base + self.c * self.delta * bump(theta / math.sqrt(self.delta))

    def dg(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.delta == 0.0:
            return np.zeros(theta.shape)
        return self.c * math.sqrt(self.delta) * bump_d1(theta / math.sqrt(self.delta))

    def d2g(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.delta == 0.0:
            return np.zeros(theta.shape)
        return self.c * bump_d2(theta / math.sqrt(self.delta))

    @property
    def radii(self) -> np.ndarray:
        return self.g(self.theta)

    @property
    def outer_radius(self) -> float:
        return self.base + self.c * self.delta

    def area_excess(self) -> float:
        """|body \\ B_base| by adaptive quadrature of (g^2 - base^2) / 2 over the bump support."""
        if self.delta == 0.0:
            return 0.0
        width = math.sqrt(self.delta)
        value, _ = integrate.quad(
            lambda t: 0.5 * (float(self.g(t)) ** 2 - self.base ** 2), -width, width, limit=200
        )
        return value

    def to_spec(self) -> ShapeSpec:
        return ShapeSpec.radial(self.radii.tolist())


def bump_counterexample(delta: float, samples: int = BUMP_SAMPLES) -> RadialBody:
    """
    Unit disk with a smooth bump of height c delta and angular width 2 sqrt(delta),
    c = 1 / (4 (1 + ||f||_C2)).

    Raises:
        GeometryError: If delta is not in (0, 1)
    """
    if not 0.0 < delta < 1.0:
        raise GeometryError(f"Bump counterexample needs 0 < delta < 1, got {delta}")
    norm = bump_c2_norm()
    return RadialBody(delta=delta, c=1.0 / (4.0 * (1.0 + norm)), f_c2_norm=norm, samples=samples)


def curvature(body: RadialBody, theta) -> np.ndarray:
    """Curvature of rho = g(theta): (2 g'^2 - g g'' + g^2) / (g'^2 + g^2)^(3/2)."""
    g = body.g(theta)
    g1 = body.dg(theta)
    g2 = body.d2g(theta)
    return (2.0 * g1 * g1 - g * g2 + g * g) / (g1 * g1 + g * g) ** 1.5


def radial_certificate(body: RadialBody) -> Tuple[float, float]:
    """(eps, outer_defect) of a radial body against the unit inner ball and the analytic outer ball."""
    excess = body.area_excess()
    inner_area = math.pi * body.base ** 2
    eps = excess / inner_area
    outer_defect = 1.0 - (inner_area + excess) / (math.pi * body.outer_radius ** 2)
    return eps, outer_defect


def exponent_slope(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Least-squares fit log y = slope log x + log C; returns (slope, C)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(math.exp(intercept))


def polygon_from_shape(spec: ShapeSpec, vertices: int = DISK_POLYGON_VERTICES) -> ConvexPolygon:
    """
    Polygonize a planar shape by boundary points and take the convex hull.

    Raises:
        GeometryError: If the shape is not convex at this resolution
    """
    if spec.dim != 2:
        raise GeometryError("Polygonization needs a planar shape")
    if spec.kind == "polygon":
        points = np.asarray(spec.params["vertices"], dtype=float)
    elif spec.kind in ("radial", "perturbed_disk"):
        theta = -math.pi + 2.0 * math.pi * np.arange(vertices) / vertices
        g = spec.radius_function(theta)
        points = np.asarray(spec.params["center"]) + g[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    elif spec.kind in ("disk", "ellipse"):
        points, _ = spec.boundary_samples(vertices)
    elif spec.kind == "rectangle":
        lo, hi = spec.bounds()
        points = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    else:
        points, _ = spec.boundary_samples(vertices)

    x, y = points[:, 0], points[:, 1]
    traced = abs(0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))
    polygon = ConvexPolygon.from_points(points)
    if area(polygon) - traced > 1e-9 * area(polygon):
        raise GeometryError(f"Shape {spec.label} is not convex")
    return polygon


def random_convex_polygon(rng: np.random.Generator, points: int = 12) -> ConvexPolygon:
    """Hull of uniform points in a randomly stretched square."""
    cloud = rng.uniform(-1.0, 1.0, size=(points, 2)) * rng.uniform(0.2, 2.0, size=2)
    return ConvexPolygon.from_points(cloud)


def near_disk_polygon(rng: np.random.Generator, amplitude: float, vertices: int = 256) -> ConvexPolygon:
    """Hull of a unit-circle sample with radial jitter of the given relative amplitude."""
    theta = np.sort(rng.uniform(-math.pi, math.pi, size=vertices))
    radius = 1.0 + amplitude * rng.uniform(0.0, 1.0, size=vertices)
    return ConvexPolygon.from_points(radius[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1))
