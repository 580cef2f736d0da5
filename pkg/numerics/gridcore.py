"""
Grid Core

Uniform Cartesian grid domains in dimension 1 or 2, scalar fields with the
zero exterior extension, and measure / perimeter / superlevel utilities.

A domain is rasterized by cell centers: cell c belongs to the open set iff its
center passes the analytic membership test of the ShapeSpec. Every domain keeps
an exterior collar inside its bounding box, so local stencils never leave the
box and every field is zero on the box boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError
from skimage.measure import find_contours, points_in_poly

from config import (
    MARGIN_DIAMETER_FRACTION,
    MIN_MARGIN_CELLS,
    PERIMETER_SMOOTHING_CELLS,
)
from errors import GridError

logger = logging.getLogger(__name__)

SHAPE_KINDS = {
    "interval": 1,
    "intervals": 1,
    "disk": 2,
    "ellipse": 2,
    "rectangle": 2,
    "stadium": 2,
    "polygon": 2,
    "radial": 2,
    "perturbed_disk": 2,
}

# boundary samples on straight edges avoid this fraction of each edge at both ends
EDGE_CORNER_FRACTION = 0.1


def _angles(count: int) -> np.ndarray:
    """Uniform angles on [-pi, pi) used by radial sample tables."""
    return -math.pi + 2.0 * math.pi * np.arange(count) / count


def _signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _is_simple(vertices: np.ndarray) -> bool:
    """Check that no two non-adjacent polygon edges cross."""
    k = len(vertices)
    for i in range(k):
        a, b = vertices[i], vertices[(i + 1) % k]
        for j in range(i + 2, k):
            if i == 0 and j == k - 1:
                continue
            if _segments_cross(a, b, vertices[j], vertices[(j + 1) % k]):
                return False
    return True


@dataclass(frozen=True)
class ShapeSpec:
    """
    Tagged analytic description of a bounded open set.

    Attributes:
        kind: One of SHAPE_KINDS
        params: Kind-specific parameters (lengths, centers, vertex or radius tables)

    Use the classmethod constructors (interval, disk, ellipse, ...) or
    from_dict for JSON input; they validate the parameters.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise GridError(f"Unknown shape kind '{self.kind}'")
        self._validate()

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------
    @classmethod
    def interval(cls, a: float, b: float) -> "ShapeSpec":
        return cls("interval", {"a": float(a), "b": float(b)})

    @classmethod
    def intervals(cls, pieces: Sequence[Sequence[float]]) -> "ShapeSpec":
        return cls("intervals", {"intervals": tuple((float(a), float(b)) for a, b in pieces)})

    @classmethod
    def disk(cls, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0)) -> "ShapeSpec":
        return cls("disk", {"radius": float(radius), "center": tuple(map(float, center))})

    @classmethod
    def ellipse(cls, a: float, b: float, center: Sequence[float] = (0.0, 0.0)) -> "ShapeSpec":
        return cls("ellipse", {"a": float(a), "b": float(b), "center": tuple(map(float, center))})

    @classmethod
    def rectangle(cls, width: float, height: float, center: Sequence[float] = (0.0, 0.0)) -> "ShapeSpec":
        return cls("rectangle", {"width": float(width), "height": float(height),
                                 "center": tuple(map(float, center))})

    @classmethod
    def stadium(cls, length: float, radius: float, center: Sequence[float] = (0.0, 0.0)) -> "ShapeSpec":
        return cls("stadium", {"length": float(length), "radius": float(radius),
                               "center": tuple(map(float, center))})

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]]) -> "ShapeSpec":
        return cls("polygon", {"vertices": tuple((float(x), float(y)) for x, y in vertices)})

    @classmethod
    def radial(cls, radii: Sequence[float], center: Sequence[float] = (0.0, 0.0)) -> "ShapeSpec":
        """Star-shaped set rho < g(theta), g sampled at uniform angles on [-pi, pi)."""
        return cls("radial", {"radii": tuple(map(float, radii)), "center": tuple(map(float, center))})

    @classmethod
    def perturbed_disk(cls, amplitude: float, mode: int, radius: float = 1.0,
                       center: Sequence[float] = (0.0, 0.0)) -> "ShapeSpec":
        """Star-shaped set rho < radius * (1 + amplitude * cos(mode * theta))."""
        return cls("perturbed_disk", {"amplitude": float(amplitude), "mode": int(mode),
                                      "radius": float(radius), "center": tuple(map(float, center))})

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ShapeSpec":
        """Build a spec from its JSON form {"kind": ..., <parameters>}."""
        if "kind" not in data:
            raise GridError("Shape description is missing 'kind'")
        kind = data["kind"]
        params = {k: v for k, v in data.items() if k != "kind"}
        builders = {
            "interval": lambda p: cls.interval(p["a"], p["b"]),
            "intervals": lambda p: cls.intervals(p["intervals"]),
            "disk": lambda p: cls.disk(p.get("radius", 1.0), p.get("center", (0.0, 0.0))),
            "ellipse": lambda p: cls.ellipse(p["a"], p["b"], p.get("center", (0.0, 0.0))),
            "rectangle": lambda p: cls.rectangle(p["width"], p["height"], p.get("center", (0.0, 0.0))),
            "stadium": lambda p: cls.stadium(p["length"], p["radius"], p.get("center", (0.0, 0.0))),
            "polygon": lambda p: cls.polygon(p["vertices"]),
            "radial": lambda p: cls.radial(p["radii"], p.get("center", (0.0, 0.0))),
            "perturbed_disk": lambda p: cls.perturbed_disk(p["amplitude"], p["mode"],
                                                           p.get("radius", 1.0),
                                                           p.get("center", (0.0, 0.0))),
        }
        if kind not in builders:
            raise GridError(f"Unknown shape kind '{kind}'")
        try:
            return builders[kind](params)
        except KeyError as e:
            raise GridError(f"Shape '{kind}' is missing parameter {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        for key, value in self.params.items():
            out[key] = [list(v) for v in value] if key in ("vertices", "intervals") else (
                list(value) if isinstance(value, tuple) else value)
        return out

    @property
    def dim(self) -> int:
        return SHAPE_KINDS[self.kind]

    @property
    def label(self) -> str:
        """Short human-readable tag used in report rows."""
        p = self.params
        if self.kind == "interval":
            return f"interval({p['a']:g},{p['b']:g})"
        if self.kind == "intervals":
            return "intervals(" + ";".join(f"{a:g},{b:g}" for a, b in p["intervals"]) + ")"
        if self.kind == "disk":
            return f"disk(R={p['radius']:g})"
        if self.kind == "ellipse":
            return f"ellipse({p['a']:g},{p['b']:g})"
        if self.kind == "rectangle":
            return f"rectangle({p['width']:g}x{p['height']:g})"
        if self.kind == "stadium":
            return f"stadium({p['length']:g},{p['radius']:g})"
        if self.kind == "polygon":
            return f"polygon[{len(p['vertices'])}]"
        if self.kind == "radial":
            return f"radial[{len(p['radii'])}]"
        return f"perturbed_disk(a={p['amplitude']:g},k={p['mode']})"

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------
    def _validate(self):
        p = self.params
        kind = self.kind
        if kind == "interval":
            if not p["b"] > p["a"]:
                raise GridError(f"Degenerate interval ({p['a']}, {p['b']}): zero measure")
        elif kind == "intervals":
            pieces = sorted(p["intervals"])
            if not pieces:
                raise GridError("Union of intervals is empty")
            for a, b in pieces:
                if not b > a:
                    raise GridError(f"Degenerate interval ({a}, {b}) in union")
        elif kind == "disk":
            if not p["radius"] > 0:
                raise GridError(f"Degenerate disk: radius {p['radius']}")
        elif kind == "ellipse":
            if not (p["a"] > 0 and p["b"] > 0):
                raise GridError(f"Degenerate ellipse: semi-axes {p['a']}, {p['b']}")
        elif kind == "rectangle":
            if not (p["width"] > 0 and p["height"] > 0):
                raise GridError(f"Degenerate rectangle {p['width']} x {p['height']}")
        elif kind == "stadium":
            if not (p["length"] >= 0 and p["radius"] > 0):
                raise GridError(f"Degenerate stadium: length {p['length']}, radius {p['radius']}")
        elif kind == "polygon":
            vertices = np.asarray(p["vertices"], dtype=float)
            if len(vertices) < 3 or abs(_signed_area(vertices)) <= 0.0:
                raise GridError("Degenerate polygon: fewer than 3 vertices or zero area")
            if not _is_simple(vertices):
                raise GridError("Polygon boundary is not a simple closed curve")
        elif kind == "radial":
            radii = np.asarray(p["radii"], dtype=float)
            if len(radii) < 3 or not np.all(radii > 0) or not np.all(np.isfinite(radii)):
                raise GridError("Radial table needs at least 3 positive finite radii")
        elif kind == "perturbed_disk":
            if not p["radius"] > 0 or not 0 <= abs(p["amplitude"]) < 1 or p["mode"] < 0:
                raise GridError(
                    f"Invalid perturbed disk: radius {p['radius']}, amplitude {p['amplitude']}, mode {p['mode']}"
                )

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------
    def _center(self) -> np.ndarray:
        return np.asarray(self.params.get("center", (0.0, 0.0)), dtype=float)

    def radius_function(self, theta: np.ndarray) -> np.ndarray:
        """Boundary radius g(theta) of a star-shaped kind (radial / perturbed_disk)."""
        p = self.params
        theta = np.asarray(theta, dtype=float)
        if self.kind == "perturbed_disk":
            return p["radius"] * (1.0 + p["amplitude"] * np.cos(p["mode"] * theta))
        if self.kind == "radial":
            radii = np.asarray(p["radii"], dtype=float)
            grid = _angles(len(radii))
            return np.interp(theta, grid, radii, period=2.0 * math.pi)
        raise GridError(f"Shape '{self.kind}' has no radius function")

    def radius_derivative(self, theta: np.ndarray) -> np.ndarray:
        p = self.params
        theta = np.asarray(theta, dtype=float)
        if self.kind == "perturbed_disk":
            return -p["radius"] * p["amplitude"] * p["mode"] * np.sin(p["mode"] * theta)
        radii = np.asarray(p["radii"], dtype=float)
        step = 2.0 * math.pi / len(radii)
        slopes = (np.roll(radii, -1) - np.roll(radii, 1)) / (2.0 * step)
        return np.interp(theta, _angles(len(radii)), slopes, period=2.0 * math.pi)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """
        Analytic membership test for the open set.

        Args:
            points: Array of shape (..., dim)

        Returns:
            Boolean array of shape (...)
        """
        pts = np.asarray(points, dtype=float)
        p = self.params
        if self.dim == 1:
            x = pts[..., 0]
            pieces = [(p["a"], p["b"])] if self.kind == "interval" else p["intervals"]
            inside = np.zeros(x.shape, dtype=bool)
            for a, b in pieces:
                inside |= (x > a) & (x < b)
            return inside

        rel = pts - self._center() if self.kind != "polygon" else pts
        x, y = rel[..., 0], rel[..., 1]
        if self.kind == "disk":
            return x * x + y * y < p["radius"] ** 2
        if self.kind == "ellipse":
            return (x / p["a"]) ** 2 + (y / p["b"]) ** 2 < 1.0
        if self.kind == "rectangle":
            return (np.abs(x) < p["width"] / 2.0) & (np.abs(y) < p["height"] / 2.0)
        if self.kind == "stadium":
            half = p["length"] / 2.0
            dx = np.maximum(np.abs(x) - half, 0.0)
            return dx * dx + y * y < p["radius"] ** 2
        if self.kind == "polygon":
            flat = pts.reshape(-1, 2)
            vertices = np.asarray(p["vertices"], dtype=float)
            return points_in_poly(flat, vertices).reshape(pts.shape[:-1])
        rho = np.hypot(x, y)
        theta = np.arctan2(y, x)
        return rho < self.radius_function(theta)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box (lo, hi) of the closure."""
        p = self.params
        if self.kind == "interval":
            return np.array([p["a"]]), np.array([p["b"]])
        if self.kind == "intervals":
            pieces = np.asarray(p["intervals"], dtype=float)
            return np.array([pieces[:, 0].min()]), np.array([pieces[:, 1].max()])
        if self.kind == "polygon":
            vertices = np.asarray(p["vertices"], dtype=float)
            return vertices.min(axis=0), vertices.max(axis=0)
        c = self._center()
        if self.kind == "disk":
            half = np.array([p["radius"], p["radius"]])
        elif self.kind == "ellipse":
            half = np.array([p["a"], p["b"]])
        elif self.kind == "rectangle":
            half = np.array([p["width"], p["height"]]) / 2.0
        elif self.kind == "stadium":
            half = np.array([p["length"] / 2.0 + p["radius"], p["radius"]])
        else:
            theta = _angles(4096)
            g = self.radius_function(theta)
            if self.kind == "radial":
                g = np.maximum(g, np.max(p["radii"]))
            reach = float(np.max(g))
            half = np.array([reach, reach])
        return c - half, c + half

    def scaled(self, t: float) -> "ShapeSpec":
        """Dilation t * Omega about the origin."""
        if not t > 0:
            raise GridError(f"Scaling factor must be positive, got {t}")
        p = dict(self.params)
        for key in ("a", "b", "radius", "width", "height", "length"):
            if key in p:
                p[key] = p[key] * t
        if "center" in p:
            p["center"] = tuple(t * c for c in p["center"])
        if self.kind == "intervals":
            p["intervals"] = tuple((t * a, t * b) for a, b in p["intervals"])
        if self.kind == "polygon":
            p["vertices"] = tuple((t * x, t * y) for x, y in p["vertices"])
        if self.kind == "radial":
            p["radii"] = tuple(t * r for r in p["radii"])
        return ShapeSpec(self.kind, p)

    def translated(self, offset: Sequence[float]) -> "ShapeSpec":
        v = np.asarray(offset, dtype=float)
        p = dict(self.params)
        if self.kind == "interval":
            p["a"], p["b"] = p["a"] + v[0], p["b"] + v[0]
        elif self.kind == "intervals":
            p["intervals"] = tuple((a + v[0], b + v[0]) for a, b in p["intervals"])
        elif self.kind == "polygon":
            p["vertices"] = tuple((x + v[0], y + v[1]) for x, y in p["vertices"])
        else:
            p["center"] = tuple(float(c + d) for c, d in zip(p.get("center", (0.0, 0.0)), v))
        return ShapeSpec(self.kind, p)

    def boundary_samples(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Sample points of the analytic boundary with their outward unit normals.

        Straight edges are sampled away from corners, where the normal is undefined.

        Args:
            count: Requested number of samples (1D shapes return their endpoints)

        Returns:
            (points, normals), each of shape (m, dim)
        """
        p = self.params
        if self.dim == 1:
            pieces = [(p["a"], p["b"])] if self.kind == "interval" else sorted(p["intervals"])
            points, normals = [], []
            for a, b in pieces:
                points += [[a], [b]]
                normals += [[-1.0], [1.0]]
            return np.asarray(points), np.asarray(normals)

        c = self._center()
        if self.kind in ("disk", "ellipse"):
            t = 2.0 * math.pi * np.arange(count) / count
            a = p["radius"] if self.kind == "disk" else p["a"]
            b = p["radius"] if self.kind == "disk" else p["b"]
            points = c + np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)
            normals = np.stack([np.cos(t) / a, np.sin(t) / b], axis=-1)
            return points, normals / np.linalg.norm(normals, axis=-1, keepdims=True)

        if self.kind in ("radial", "perturbed_disk"):
            theta = _angles(count)
            g = self.radius_function(theta)
            dg = self.radius_derivative(theta)
            radial = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            angular = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
            tangent = dg[:, None] * radial + g[:, None] * angular
            normals = np.stack([tangent[:, 1], -tangent[:, 0]], axis=-1)
            points = c + g[:, None] * radial
            return points, normals / np.linalg.norm(normals, axis=-1, keepdims=True)

        if self.kind == "stadium":
            return self._stadium_samples(count)

        if self.kind == "rectangle":
            hw, hh = p["width"] / 2.0, p["height"] / 2.0
            vertices = c + np.array([[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]])
        else:
            vertices = np.asarray(p["vertices"], dtype=float)
            if _signed_area(vertices) < 0:
                vertices = vertices[::-1]
        return _edge_samples(vertices, count)

    def _stadium_samples(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        p = self.params
        c = self._center()
        half, radius = p["length"] / 2.0, p["radius"]
        total = 2.0 * p["length"] + 2.0 * math.pi * radius
        s = total * (np.arange(count) + 0.5) / count
        points = np.zeros((count, 2))
        normals = np.zeros((count, 2))
        edge, arc = p["length"], math.pi * radius
        for i, arclength in enumerate(s):
            if arclength < edge:  # bottom edge, left to right
                points[i] = (-half + arclength, -radius)
                normals[i] = (0.0, -1.0)
            elif arclength < edge + arc:  # right cap
                phi = -math.pi / 2.0 + (arclength - edge) / radius
                normals[i] = (math.cos(phi), math.sin(phi))
                points[i] = (half + radius * math.cos(phi), radius * math.sin(phi))
            elif arclength < 2 * edge + arc:  # top edge, right to left
                points[i] = (half - (arclength - edge - arc), radius)
                normals[i] = (0.0, 1.0)
            else:  # left cap
                phi = math.pi / 2.0 + (arclength - 2 * edge - arc) / radius
                normals[i] = (math.cos(phi), math.sin(phi))
                points[i] = (-half + radius * math.cos(phi), radius * math.sin(phi))
        return points + c, normals


def _edge_samples(vertices: np.ndarray, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Samples on the middle of each edge of a CCW polygon, proportional to edge length."""
    starts = vertices
    ends = np.roll(vertices, -1, axis=0)
    lengths = np.linalg.norm(ends - starts, axis=1)
    share = np.maximum(1, np.round(count * lengths / lengths.sum()).astype(int))
    points, normals = [], []
    for a, b, length, k in zip(starts, ends, lengths, share):
        direction = (b - a) / length
        outward = np.array([direction[1], -direction[0]])
        fractions = EDGE_CORNER_FRACTION + (1 - 2 * EDGE_CORNER_FRACTION) * (np.arange(k) + 0.5) / k
        for f in fractions:
            points.append(a + f * (b - a))
            normals.append(outward)
    return np.asarray(points), np.asarray(normals)


@dataclass(frozen=True, eq=False)
class GridDomain:
    """
    Uniform-grid representation of a bounded open set with implicit zero exterior.

    Attributes:
        dim: Spatial dimension (1 or 2)
        spacing: Cell width h
        origin: Lower corner of the bounding box
        interior_mask: Boolean per bbox cell, True when the cell center lies in the set
        spec: Analytic description the mask was rasterized from, if any
        empty: True only for flagged empty superlevel sets
    """

    dim: int
    spacing: float
    origin: Tuple[float, ...]
    interior_mask: np.ndarray
    spec: Optional[ShapeSpec] = None
    empty: bool = False

    def __post_init__(self):
        mask = np.array(self.interior_mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "interior_mask", mask)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if self.dim not in (1, 2) or mask.ndim != self.dim or len(self.origin) != self.dim:
            raise GridError(f"Mask of shape {mask.shape} does not match dimension {self.dim}")
        if not self.spacing > 0:
            raise GridError(f"Grid spacing must be positive, got {self.spacing}")
        if self.empty:
            return
        if not mask.any():
            raise GridError("Interior mask is empty")
        for axis in range(self.dim):
            first = np.take(mask, 0, axis=axis)
            last = np.take(mask, -1, axis=axis)
            if first.any() or last.any():
                raise GridError(f"Interior touches the bounding box along axis {axis}; no exterior collar")

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.interior_mask.shape

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.interior_mask))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def center(self) -> np.ndarray:
        """Center of the bounding box."""
        return np.asarray(self.origin) + 0.5 * self.spacing * np.asarray(self.shape)

    def axes(self) -> Tuple[np.ndarray, ...]:
        """Cell-center coordinates along each axis."""
        return tuple(o + (np.arange(n) + 0.5) * self.spacing for o, n in zip(self.origin, self.shape))

    def cell_centers(self) -> np.ndarray:
        """Cell centers as an array of shape (*shape, dim)."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(grids, axis=-1)

    def interior_centers(self) -> np.ndarray:
        """Centers of interior cells in lexicographic cell order, shape (n_interior, dim)."""
        return self.cell_centers()[self.interior_mask]

    def same_grid(self, other: "GridDomain") -> bool:
        return self.dim == other.dim and self.spacing == other.spacing and self.shape == other.shape

    def with_mask(self, mask: np.ndarray) -> "GridDomain":
        """Domain on the same bounding box with a new mask; an empty mask is flagged."""
        mask = np.asarray(mask, dtype=bool)
        return GridDomain(self.dim, self.spacing, self.origin, mask, None, empty=not mask.any())

    def shifted(self, cells: Sequence[int]) -> "GridDomain":
        """Translate the domain by an integer number of cells along each axis."""
        offset = np.asarray(cells, dtype=int)
        if offset.shape != (self.dim,):
            raise GridError(f"Shift {cells} does not match dimension {self.dim}")
        origin = tuple(np.asarray(self.origin) + offset * self.spacing)
        spec = self.spec.translated(offset * self.spacing) if self.spec is not None else None
        return GridDomain(self.dim, self.spacing, origin, self.interior_mask, spec, self.empty)

    def to_pgm(self) -> str:
        """Mask as portable greymap text (P2), interior cells white."""
        image = np.atleast_2d(self.interior_mask.astype(int) * 255)
        if self.dim == 2:
            image = image.T[::-1]  # rows run top-down in y
        return _pgm_text(image)


def _pgm_text(image: np.ndarray) -> str:
    rows = [" ".join(str(int(v)) for v in row) for row in image]
    height, width = image.shape
    return "P2\n" + f"{width} {height}\n255\n" + "\n".join(rows) + "\n"


@dataclass(frozen=True, eq=False)
class ScalarField:
    """
    Grid function on a domain's bounding box, exactly zero outside the domain.

    Attributes:
        domain: GridDomain the field lives on
        values: Real value per bbox cell
    """

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.domain.shape:
            raise GridError(f"Field shape {values.shape} does not match domain {self.domain.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("Field has non-finite values")
        if np.any(values[~self.domain.interior_mask] != 0.0):
            raise GridError("Field is nonzero outside the domain")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, domain: GridDomain) -> "ScalarField":
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def from_function(cls, domain: GridDomain, fn) -> "ScalarField":
        """Sample fn(centers) at interior cell centers; exterior cells get 0."""
        values = np.where(domain.interior_mask, fn(domain.cell_centers()), 0.0)
        return cls(domain, values)

    @classmethod
    def from_interior(cls, domain: GridDomain, interior_values: np.ndarray) -> "ScalarField":
        """Scatter values given in lexicographic interior order onto the bbox."""
        values = np.zeros(domain.shape)
        values[domain.interior_mask] = interior_values
        return cls(domain, values)

    def interior_values(self) -> np.ndarray:
        return self.values[self.domain.interior_mask]

    def inner(self, other: "ScalarField") -> float:
        """Discrete L2 inner product sum u v h^n."""
        return float(np.sum(self.values * other.values)) * self.domain.cell_volume

    def l2_norm(self) -> float:
        return math.sqrt(self.inner(self))

    def scaled(self, factor: float) -> "ScalarField":
        return ScalarField(self.domain, factor * self.values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if other.domain is not self.domain and not self.domain.same_grid(other.domain):
            raise GridError("Cannot add fields on different grids")
        return ScalarField(self.domain, self.values + other.values)

    def to_pgm(self) -> str:
        peak = float(np.max(np.abs(self.values))) or 1.0
        image = np.atleast_2d(np.round(255 * np.abs(self.values) / peak).astype(int))
        if self.domain.dim == 2:
            image = image.T[::-1]
        return _pgm_text(image)


def build_grid_domain(spec: ShapeSpec, h: float) -> GridDomain:
    """
    Rasterize a shape on a uniform grid of spacing h.

    The bounding box is snapped to multiples of h and padded by an exterior
    collar of max(MIN_MARGIN_CELLS, MARGIN_DIAMETER_FRACTION * diameter / h) cells.

    Args:
        spec: Analytic shape
        h: Cell width

    Returns:
        GridDomain whose cells are interior iff their centers lie in the shape

    Raises:
        GridError: If h is not positive or no cell center falls inside the shape
    """
    if not h > 0:
        raise GridError(f"Grid spacing must be positive, got {h}")
    lo, hi = spec.bounds()
    extent = float(np.max(hi - lo))
    margin = max(MIN_MARGIN_CELLS, int(math.ceil(MARGIN_DIAMETER_FRACTION * extent / h)))
    lo_idx = np.floor(lo / h).astype(int) - margin
    hi_idx = np.ceil(hi / h).astype(int) + margin
    shape = tuple(int(n) for n in hi_idx - lo_idx)
    origin = tuple(float(i) * h for i in lo_idx)

    axes = [o + (np.arange(n) + 0.5) * h for o, n in zip(origin, shape)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    mask = spec.contains(centers)
    if not mask.any():
        raise GridError(f"Shape {spec.label} has no cell center inside at h={h}; zero measure on this grid")
    domain = GridDomain(spec.dim, h, origin, mask, spec)
    logger.debug(f"Built grid domain {spec.label}: shape {shape}, {domain.n_interior} interior cells")
    return domain


def volume(d: GridDomain) -> float:
    """Counting measure |Omega| = (#interior cells) * h^n."""
    return d.n_interior * d.cell_volume


def perimeter_estimate(d: GridDomain, smoothing: float = PERIMETER_SMOOTHING_CELLS) -> float:
    """
    Boundary measure of a grid domain.

    In 1D this is the number of interface points. In 2D it is the length of the
    0.5-level contour of the (optionally Gaussian-smoothed) indicator, traced
    by marching squares.

    Args:
        d: Grid domain
        smoothing: Gaussian sigma in cells applied to the indicator; 0 uses the raw mask

    Returns:
        Point count (1D) or contour length (2D)
    """
    if d.empty:
        return 0.0
    if d.dim == 1:
        return float(np.count_nonzero(np.diff(d.interior_mask.astype(np.int8))))

    pad = 3 + int(math.ceil(3 * smoothing))
    indicator = np.pad(d.interior_mask.astype(float), pad)
    if smoothing > 0:
        indicator = ndimage.gaussian_filter(indicator, sigma=smoothing, mode="constant", cval=0.0)
    length = 0.0
    for contour in find_contours(indicator, 0.5):
        length += float(np.sum(np.linalg.norm(np.diff(contour, axis=0), axis=1)))
    return length * d.spacing


def superlevel_set(u: ScalarField, t: float) -> GridDomain:
    """
    Discrete superlevel set {u > t} on the same grid.

    Args:
        u: Field on a domain
        t: Level, t >= 0

    Returns:
        GridDomain with mask u > t; an empty result carries empty=True
    """
    if t < 0:
        raise GridError(f"Superlevel threshold must be nonnegative, got {t}")
    mask = u.domain.interior_mask & (u.values > t)
    result = u.domain.with_mask(mask)
    if result.empty:
        logger.warning(f"Superlevel set at t={t:.6g} is empty")
    return result


def distance_transform(d: GridDomain) -> ScalarField:
    """Exact Euclidean distance from each interior cell center to the nearest exterior cell center."""
    if d.empty:
        raise GridError("Distance transform of an empty domain")
    distance = ndimage.distance_transform_edt(d.interior_mask) * d.spacing
    return ScalarField(d, np.where(d.interior_mask, distance, 0.0))


def convexity_score(d: GridDomain) -> float:
    """
    Ratio |Omega| / |hull(Omega)| with the convex hull of the interior cell
    centers rasterized on the same grid. 1.0 means discretely convex.
    """
    if d.empty:
        raise GridError("Convexity score of an empty domain")
    if d.dim == 1:
        idx = np.flatnonzero(d.interior_mask)
        return d.n_interior / float(idx[-1] - idx[0] + 1)

    points = d.interior_centers()
    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError):
        # collinear or too few points: the set is its own hull
        return 1.0
    centers = d.cell_centers().reshape(-1, 2)
    tol = 1e-9 * d.spacing
    inside = np.all(centers @ hull.equations[:, :2].T + hull.equations[:, 2] <= tol, axis=1)
    return d.n_interior / float(np.count_nonzero(inside))
