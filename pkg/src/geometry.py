"""
Analytic planar domains of prescribed area and their grid discretizations.

Every shape is centred at the origin. `level(x, y)` is negative strictly
inside, zero on the boundary and positive outside; the grid builder and the
Monte Carlo exit test only rely on its sign.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import quad

from .constants import ShapeKind
from .errors import DomainError, MaskError

logger = logging.getLogger(__name__)

# Sharp planar isoperimetric constant: |dOmega| >= 2 sqrt(pi) |Omega|^(1/2)
C2 = 2.0 * np.sqrt(np.pi)

_BISECTION_STEPS = 64


class Domain2D(BaseModel):
    """Base class for analytic shapes; lengths are in abstract spatial units"""
    model_config = ConfigDict(frozen=True)

    kind: str
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or self.kind

    def area(self) -> float:
        raise NotImplementedError

    def perimeter(self) -> float:
        raise NotImplementedError

    def inradius(self) -> float:
        raise NotImplementedError

    def bbox(self) -> Tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax)"""
        raise NotImplementedError

    def level(self, x, y):
        raise NotImplementedError

    def distance_to_boundary(self, x, y):
        """Euclidean distance to the boundary for points inside the domain"""
        raise NotImplementedError

    def scaled(self, factor: float) -> "Domain2D":
        raise NotImplementedError

    def contains(self, x, y):
        """Strict containment; boundary points are outside"""
        return self.level(x, y) < 0

    def isoperimetric_ratio(self) -> float:
        return self.perimeter() / (C2 * np.sqrt(self.area()))

    def cut_fraction(self, px, py, dx: int, dy: int, h: float):
        """
        Fractional distance, in units of h, from interior points to the boundary
        along the axis direction (dx, dy).

        Assumes the grid neighbour at distance h is outside. Bisection on the sign
        of `level` keeps the result symmetric under reflections of the shape.
        """
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        lo = np.zeros_like(px)
        hi = np.ones_like(px)
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            outside = self.level(px + mid * h * dx, py + mid * h * dy) >= 0
            hi = np.where(outside, mid, hi)
            lo = np.where(outside, lo, mid)
        return hi


class Disk(Domain2D):
    kind: Literal["disk"] = ShapeKind.DISK
    radius: float = Field(gt=0)

    def area(self) -> float:
        return np.pi * self.radius ** 2

    def perimeter(self) -> float:
        return 2.0 * np.pi * self.radius

    def inradius(self) -> float:
        return self.radius

    def bbox(self):
        r = self.radius
        return (-r, r, -r, r)

    def level(self, x, y):
        return x * x + y * y - self.radius ** 2

    def distance_to_boundary(self, x, y):
        return self.radius - np.hypot(x, y)

    def scaled(self, factor: float) -> "Disk":
        return self.model_copy(update={"radius": self.radius * factor})


class Ellipse(Domain2D):
    kind: Literal["ellipse"] = ShapeKind.ELLIPSE
    a: float = Field(gt=0)
    b: float = Field(gt=0)

    def area(self) -> float:
        return np.pi * self.a * self.b

    def perimeter(self) -> float:
        # No closed form: adaptive quadrature of the arc-length integrand
        a, b = self.a, self.b
        value, _ = quad(lambda t: np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2),
                        0.0, 0.5 * np.pi, epsabs=0.0, epsrel=1e-13, limit=200)
        return 4.0 * value

    def inradius(self) -> float:
        return min(self.a, self.b)

    def bbox(self):
        return (-self.a, self.a, -self.b, self.b)

    def level(self, x, y):
        return (x / self.a) ** 2 + (y / self.b) ** 2 - 1.0

    def distance_to_boundary(self, x, y):
        x = np.abs(np.asarray(x, dtype=float))
        y = np.abs(np.asarray(y, dtype=float))
        a, b = self.a, self.b
        if b > a:
            a, b = b, a
            x, y = y, x
        return _ellipse_distance(a, b, x, y)

    def scaled(self, factor: float) -> "Ellipse":
        return self.model_copy(update={"a": self.a * factor, "b": self.b * factor})


class Rectangle(Domain2D):
    kind: Literal["rectangle"] = ShapeKind.RECTANGLE
    width: float = Field(gt=0)
    height: float = Field(gt=0)

    def area(self) -> float:
        return self.width * self.height

    def perimeter(self) -> float:
        return 2.0 * (self.width + self.height)

    def inradius(self) -> float:
        return 0.5 * min(self.width, self.height)

    def bbox(self):
        w, h = 0.5 * self.width, 0.5 * self.height
        return (-w, w, -h, h)

    def level(self, x, y):
        return np.maximum(np.abs(x) - 0.5 * self.width, np.abs(y) - 0.5 * self.height)

    def distance_to_boundary(self, x, y):
        return np.minimum(0.5 * self.width - np.abs(x), 0.5 * self.height - np.abs(y))

    def scaled(self, factor: float) -> "Rectangle":
        return self.model_copy(update={"width": self.width * factor, "height": self.height * factor})


class Annulus(Domain2D):
    kind: Literal["annulus"] = ShapeKind.ANNULUS
    r0: float = Field(gt=0)
    r1: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_radii(self):
        if not self.r0 < self.r1:
            raise ValueError(f"annulus requires r0 < r1, got r0={self.r0}, r1={self.r1}")
        return self

    def area(self) -> float:
        return np.pi * (self.r1 ** 2 - self.r0 ** 2)

    def perimeter(self) -> float:
        return 2.0 * np.pi * (self.r0 + self.r1)

    def inradius(self) -> float:
        return 0.5 * (self.r1 - self.r0)

    def bbox(self):
        r = self.r1
        return (-r, r, -r, r)

    def level(self, x, y):
        rho = np.hypot(x, y)
        return np.maximum(rho - self.r1, self.r0 - rho)

    def distance_to_boundary(self, x, y):
        rho = np.hypot(x, y)
        return np.minimum(self.r1 - rho, rho - self.r0)

    def scaled(self, factor: float) -> "Annulus":
        return self.model_copy(update={"r0": self.r0 * factor, "r1": self.r1 * factor})


class Stadium(Domain2D):
    """Rectangle of length `length` and height 2r capped by two half-disks of radius r"""
    kind: Literal["stadium"] = ShapeKind.STADIUM
    r: float = Field(gt=0)
    length: float = Field(gt=0)

    def area(self) -> float:
        return 2.0 * self.r * self.length + np.pi * self.r ** 2

    def perimeter(self) -> float:
        return 2.0 * self.length + 2.0 * np.pi * self.r

    def inradius(self) -> float:
        return self.r

    def bbox(self):
        half = 0.5 * self.length + self.r
        return (-half, half, -self.r, self.r)

    def _segment_distance(self, x, y):
        dx = np.maximum(np.abs(x) - 0.5 * self.length, 0.0)
        return np.hypot(dx, y)

    def level(self, x, y):
        return self._segment_distance(x, y) - self.r

    def distance_to_boundary(self, x, y):
        return self.r - self._segment_distance(x, y)

    def scaled(self, factor: float) -> "Stadium":
        return self.model_copy(update={"r": self.r * factor, "length": self.length * factor})


def _ellipse_distance(a: float, b: float, x, y, steps: int = 100):
    """
    Distance from interior points (x, y >= 0) to the ellipse (x/a)^2 + (y/b)^2 = 1, a >= b.

    The closest point is (a^2 x / (t + a^2), b^2 y / (t + b^2)) where t is the root of
    F(t) = (a x / (t + a^2))^2 + (b y / (t + b^2))^2 - 1, bracketed in
    [-b^2 + b y, -b^2 + sqrt(a^2 x^2 + b^2 y^2)].
    """
    x, y = np.broadcast_arrays(x, y)
    dist = np.empty(x.shape, dtype=float)

    on_axis = y <= 0.0
    if np.any(on_axis):
        xa = x[on_axis]
        if a > b:
            limit = (a * a - b * b) / a
            xc = np.where(xa < limit, a * a * xa / (a * a - b * b), a)
        else:
            xc = np.full_like(xa, a)
        yc = b * np.sqrt(np.clip(1.0 - (xc / a) ** 2, 0.0, None))
        dist[on_axis] = np.hypot(xc - xa, yc)

    off = ~on_axis
    if np.any(off):
        xo, yo = x[off], y[off]
        lo = -b * b + b * yo
        hi = -b * b + np.sqrt((a * xo) ** 2 + (b * yo) ** 2)
        for _ in range(steps):
            t = 0.5 * (lo + hi)
            f = (a * xo / (t + a * a)) ** 2 + (b * yo / (t + b * b)) ** 2 - 1.0
            lo = np.where(f > 0, t, lo)
            hi = np.where(f > 0, hi, t)
        t = 0.5 * (lo + hi)
        xc = a * a * xo / (t + a * a)
        yc = b * b * yo / (t + b * b)
        dist[off] = np.hypot(xc - xo, yc - yo)
    return dist


_DIRECTIONS = {"e": (1, 0), "w": (-1, 0), "n": (0, 1), "s": (0, -1)}


@dataclass(frozen=True, eq=False)
class GridMask:
    """
    Discretized domain on a uniform grid.

    Arrays are indexed [j, i] with x = x[i], y = y[j]. The outermost ring of nodes
    is always exterior, so every interior node has four grid neighbours. For each
    interior node the cut arrays hold the distance, in units of h, to the nearest
    boundary crossing along that axis direction (1 when the neighbour is interior).
    """
    h: float
    x: np.ndarray
    y: np.ndarray
    interior: np.ndarray
    cut_e: np.ndarray
    cut_w: np.ndarray
    cut_n: np.ndarray
    cut_s: np.ndarray
    domain: Optional[Domain2D] = field(default=None)

    def __post_init__(self):
        for arr in (self.x, self.y, self.interior, self.cut_e, self.cut_w, self.cut_n, self.cut_s):
            arr.flags.writeable = False

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def ny(self) -> int:
        return self.y.size

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def origin(self) -> Tuple[float, float]:
        return (float(self.x[0]), float(self.y[0]))

    @property
    def count(self) -> int:
        return int(self.interior.sum())

    @cached_property
    def coords(self) -> Tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X, Y), each of shape (ny, nx)"""
        return np.meshgrid(self.x, self.y)

    def cut(self, direction: str) -> np.ndarray:
        return {"e": self.cut_e, "w": self.cut_w, "n": self.cut_n, "s": self.cut_s}[direction]

    def neighbor_interior(self, direction: str) -> np.ndarray:
        """Interior flag of the neighbour in the given direction ('e', 'w', 'n', 's')"""
        di, dj = _DIRECTIONS[direction]
        return shift(self.interior, di, dj, fill=False)

    @cached_property
    def weights(self) -> np.ndarray:
        """
        Cut-cell area weights: each interior node owns half a cell towards interior
        neighbours and the whole distance to the boundary across a cut.
        """
        half = {}
        for d in _DIRECTIONS:
            half[d] = np.where(self.neighbor_interior(d), 0.5, self.cut(d))
        w = (half["e"] + half["w"]) * (half["n"] + half["s"]) * self.h ** 2
        return np.where(self.interior, w, 0.0)

    @property
    def area(self) -> float:
        """Volume of the domain: analytic when known, else the weighted node count"""
        if self.domain is not None:
            return self.domain.area()
        return float(self.weights.sum())

    def enclosed_area(self) -> float:
        """
        Area of the polygonal region bounded by the cut points: whole cells inside plus,
        for each boundary cell, the polygon of its interior corners and edge crossings.
        A saddle cell joins its two interior corners when the cell centre is inside.
        """
        h, x, y, inside = self.h, self.x, self.y, self.interior
        a = inside.astype(np.int8)
        case = a[:-1, :-1] + 2 * a[:-1, 1:] + 4 * a[1:, 1:] + 8 * a[1:, :-1]
        total = float(np.count_nonzero(case == 15)) * h * h
        for j, i in zip(*np.nonzero((case != 0) & (case != 15))):
            corners = [(j, i), (j, i + 1), (j + 1, i + 1), (j + 1, i)]
            points = []
            for k in range(4):
                p, q = corners[k], corners[(k + 1) % 4]
                if inside[p]:
                    points.append((x[p[1]], y[p[0]]))
                if inside[p] != inside[q]:
                    points.append(self._crossing(p, q))
            code = int(case[j, i])
            if code in (5, 10) and not self._center_inside(j, i):
                if code == 5:
                    total += _polygon_area([points[0], points[1], points[5]])
                    total += _polygon_area(points[2:5])
                else:
                    total += _polygon_area(points[0:3]) + _polygon_area(points[3:6])
            else:
                total += _polygon_area(points)
        return total

    def _crossing(self, p, q) -> Tuple[float, float]:
        """Boundary point on the grid edge between nodes p and q (exactly one interior)"""
        node, other = (p, q) if self.interior[p] else (q, p)
        dj, di = other[0] - node[0], other[1] - node[1]
        direction = {(0, 1): "e", (0, -1): "w", (1, 0): "n", (-1, 0): "s"}[(dj, di)]
        s = self.cut(direction)[node] * self.h
        return (self.x[node[1]] + di * s, self.y[node[0]] + dj * s)

    def _center_inside(self, j: int, i: int) -> bool:
        if self.domain is None:
            return False
        cx = 0.5 * (self.x[i] + self.x[i + 1])
        cy = 0.5 * (self.y[j] + self.y[j + 1])
        return bool(self.domain.contains(cx, cy))

    def bounding_extent(self) -> Tuple[float, float]:
        """Side lengths of the smallest box holding the interior nodes and their ring"""
        jj, ii = np.nonzero(self.interior)
        lx = (ii.max() - ii.min() + 2) * self.h
        ly = (jj.max() - jj.min() + 2) * self.h
        return float(lx), float(ly)


def _polygon_area(points) -> float:
    """Shoelace area of a counter-clockwise polygon"""
    pts = np.asarray(points, dtype=float)
    xs, ys = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1)))


def shift(arr: np.ndarray, di: int, dj: int, fill=0):
    """out[j, i] = arr[j + dj, i + di], with `fill` outside the array"""
    out = np.full_like(arr, fill)
    ny, nx = arr.shape
    src_j = slice(max(dj, 0), ny + min(dj, 0))
    dst_j = slice(max(-dj, 0), ny + min(-dj, 0))
    src_i = slice(max(di, 0), nx + min(di, 0))
    dst_i = slice(max(-di, 0), nx + min(-di, 0))
    out[dst_j, dst_i] = arr[src_j, src_i]
    return out


def _symmetric_axis(lo: float, hi: float, h: float) -> np.ndarray:
    center = 0.5 * (lo + hi)
    k = int(np.ceil(0.5 * (hi - lo) / h)) + 1
    return center + (np.arange(2 * k + 1) - k) * h


def build_mask(domain: Domain2D, h: float) -> GridMask:
    """
    Discretize a domain on a grid of spacing h with Shortley-Weller cut data.

    The grid is symmetric about the centre of the bounding box and padded by one
    exterior ring.

    Raises:
        MaskError: h not positive, not below the inradius, or no interior node
    """
    if not np.isfinite(h) or h <= 0:
        raise MaskError(f"grid spacing must be positive, got {h}")
    if h >= domain.inradius():
        raise MaskError(f"grid spacing {h} must be smaller than the inradius {domain.inradius():.6g} of {domain.name}")

    xmin, xmax, ymin, ymax = domain.bbox()
    x = _symmetric_axis(xmin, xmax, h)
    y = _symmetric_axis(ymin, ymax, h)
    X, Y = np.meshgrid(x, y)
    interior = domain.contains(X, Y)
    if not interior.any():
        raise MaskError(f"no interior nodes for {domain.name} at h={h}; refine the grid")

    cuts = {}
    for d, (di, dj) in _DIRECTIONS.items():
        cut = np.ones(interior.shape)
        crossing = interior & ~shift(interior, di, dj, fill=False)
        if crossing.any():
            cut[crossing] = domain.cut_fraction(X[crossing], Y[crossing], di, dj, h)
        cuts[d] = cut

    mask = GridMask(h=float(h), x=x, y=y, interior=interior,
                    cut_e=cuts["e"], cut_w=cuts["w"], cut_n=cuts["n"], cut_s=cuts["s"],
                    domain=domain)
    logger.debug("mask %s h=%g: %dx%d nodes, %d interior", domain.name, h, mask.nx, mask.ny, mask.count)
    return mask


def equal_area_family(area: float) -> List[Domain2D]:
    """
    Comparison class of shapes sharing one area: disk, square, 2:1 ellipse,
    4:1 rectangle, stadium (straight part equal to the cap diameter) and
    annulus with r1 = 2 r0.
    """
    if not np.isfinite(area) or area <= 0:
        raise DomainError(f"area must be positive, got {area}")
    side = np.sqrt(area)
    a = np.sqrt(2.0 * area / np.pi)
    r_stadium = np.sqrt(area / (4.0 + np.pi))
    r0 = np.sqrt(area / (3.0 * np.pi))
    return [
        Disk(radius=np.sqrt(area / np.pi)),
        Rectangle(width=side, height=side, label=ShapeKind.SQUARE),
        Ellipse(a=a, b=0.5 * a),
        Rectangle(width=2.0 * side, height=0.5 * side),
        Stadium(r=r_stadium, length=2.0 * r_stadium),
        Annulus(r0=r0, r1=2.0 * r0),
    ]


def family_member(kind: str, area: float) -> Domain2D:
    """The member of `equal_area_family(area)` named `kind`"""
    for shape in equal_area_family(area):
        if shape.name == kind:
            return shape
    raise DomainError(f"Invalid shape {kind!r}. Must be one of: {', '.join(ShapeKind.all())}")
