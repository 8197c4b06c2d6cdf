"""2-D geometry kernel for oriented-box work.

Image coordinate convention throughout: x grows rightward, y grows downward
(pixel coordinates). Polygons are stored with positive signed area under the
mathematical orientation, which renders clockwise on screen. All functions are
pure and operate on immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "EPS_GEOM",
    "GeometryError",
    "InvalidPolygonError",
    "DegenerateBoxError",
    "Point2",
    "HBox",
    "OrientedRect",
    "QuadBox",
    "polygon_area",
    "clip_convex",
    "convex_hull",
    "hbox_iou",
    "rotated_iou",
    "aabb_of",
    "min_area_rect",
]

# Degeneracy tolerance in px^2; pixel-scale inputs keep real signal far above it.
EPS_GEOM = 1e-9

Point2 = tuple[float, float]


class GeometryError(ValueError):
    """Base class for geometric contract violations."""


class InvalidPolygonError(GeometryError):
    """Polygon has too few vertices or no usable area."""


class DegenerateBoxError(GeometryError):
    """Box (or point set) has no usable area / orientation."""


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class HBox:
    """Axis-aligned box: center (x, y) and positive width/height, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not _finite(self.x, self.y, self.w, self.h):
            raise DegenerateBoxError("HBox fields must be finite")
        if self.w <= 0 or self.h <= 0:
            raise DegenerateBoxError(f"HBox needs positive size, got w={self.w}, h={self.h}")

    @property
    def x_min(self) -> float:
        return self.x - self.w / 2

    @property
    def x_max(self) -> float:
        return self.x + self.w / 2

    @property
    def y_min(self) -> float:
        return self.y - self.h / 2

    @property
    def y_max(self) -> float:
        return self.y + self.h / 2

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> np.ndarray:
        """Corners as a (4, 2) array: TL, TR, BR, BL."""
        return np.array(
            [
                [self.x_min, self.y_min],
                [self.x_max, self.y_min],
                [self.x_max, self.y_max],
                [self.x_min, self.y_max],
            ]
        )


@dataclass(frozen=True)
class OrientedRect:
    """Rotated rectangle in the OpenCV-style five-parameter convention.

    theta is pinned to [-pi/2, 0): w is the length of the edge that makes angle
    theta with the +x axis. Construction canonicalizes any aliased input
    (theta shifted by multiples of pi/2 with w/h exchanged accordingly), so two
    five-parameter forms describing the same rectangle compare equal.
    """

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self) -> None:
        if not _finite(self.cx, self.cy, self.w, self.h, self.theta):
            raise DegenerateBoxError("OrientedRect fields must be finite")
        if self.w <= 0 or self.h <= 0:
            raise DegenerateBoxError(
                f"OrientedRect needs positive size, got w={self.w}, h={self.h}"
            )
        t = math.fmod(self.theta, math.pi)
        if t < 0:
            t += math.pi
        if t >= math.pi:  # rounding of tiny negatives
            t = 0.0
        # t in [0, pi); fold into [-pi/2, 0), exchanging edges when the fold
        # crosses a quarter turn.
        if t >= math.pi / 2:
            theta = t - math.pi
        else:
            theta = t - math.pi / 2
            w, h = self.w, self.h
            object.__setattr__(self, "w", h)
            object.__setattr__(self, "h", w)
        object.__setattr__(self, "theta", theta)

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> np.ndarray:
        """Corners as a (4, 2) array in rectangle path order."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        ux, uy = c * self.w / 2, s * self.w / 2
        vx, vy = -s * self.h / 2, c * self.h / 2
        return np.array(
            [
                [self.cx - ux - vx, self.cy - uy - vy],
                [self.cx + ux - vx, self.cy + uy - vy],
                [self.cx + ux + vx, self.cy + uy + vy],
                [self.cx - ux + vx, self.cy - uy + vy],
            ]
        )


@dataclass(frozen=True)
class QuadBox:
    """Convex quadrilateral, vertices in canonical (left, top, right, bottom) order.

    The canonical order is positive-shoelace (clockwise on screen) starting at
    the leftmost vertex; for quadrilaterals produced from oriented rectangles
    the four slots are exactly the left/top/right/bottom extreme vertices.
    Use :meth:`from_points` to build one from vertices in arbitrary cyclic order.
    """

    vertices: tuple[Point2, Point2, Point2, Point2]

    def __post_init__(self) -> None:
        if len(self.vertices) != 4:
            raise InvalidPolygonError("QuadBox needs exactly 4 vertices")
        flat = [c for p in self.vertices for c in p]
        if not _finite(*flat):
            raise InvalidPolygonError("QuadBox vertices must be finite")
        if abs(_signed_area(np.asarray(self.vertices, dtype=float))) <= EPS_GEOM:
            raise InvalidPolygonError("QuadBox vertices are (nearly) collinear")

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "QuadBox":
        """Build from four vertices in any cyclic order / orientation."""
        arr = np.asarray(list(points), dtype=float).reshape(4, 2)
        centroid = arr.mean(axis=0)
        angles = np.arctan2(arr[:, 1] - centroid[1], arr[:, 0] - centroid[0])
        arr = arr[np.argsort(angles, kind="stable")]
        # rotate so the leftmost (tie: topmost) vertex comes first
        start = min(range(4), key=lambda i: (arr[i, 0], arr[i, 1]))
        arr = np.roll(arr, -start, axis=0)
        return cls(tuple((float(x), float(y)) for x, y in arr))  # type: ignore[arg-type]

    @property
    def left(self) -> Point2:
        return self.vertices[0]

    @property
    def top(self) -> Point2:
        return self.vertices[1]

    @property
    def right(self) -> Point2:
        return self.vertices[2]

    @property
    def bottom(self) -> Point2:
        return self.vertices[3]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def area(self) -> float:
        return abs(_signed_area(self.as_array()))


BoxLike = Union[OrientedRect, QuadBox]


def _signed_area(vertices: np.ndarray) -> float:
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _as_polygon(poly: Union[np.ndarray, Sequence[Sequence[float]], QuadBox]) -> np.ndarray:
    if isinstance(poly, QuadBox):
        return poly.as_array()
    arr = np.asarray(poly, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidPolygonError(f"polygon must be an (n, 2) vertex array, got {arr.shape}")
    return arr


def polygon_area(poly: Union[np.ndarray, Sequence[Sequence[float]], QuadBox]) -> float:
    """Absolute shoelace area of a convex polygon.

    Raises:
        InvalidPolygonError: fewer than 3 vertices, non-finite coordinates, or
            degenerate (collinear) input.
    """
    arr = _as_polygon(poly)
    if arr.shape[0] < 3:
        raise InvalidPolygonError(f"polygon needs >= 3 vertices, got {arr.shape[0]}")
    if not np.isfinite(arr).all():
        raise InvalidPolygonError("polygon has non-finite vertices")
    area = abs(_signed_area(arr))
    if area <= EPS_GEOM:
        raise InvalidPolygonError("polygon is degenerate (collinear vertices)")
    return area


def _oriented_ccw(arr: np.ndarray) -> np.ndarray:
    return arr if _signed_area(arr) >= 0 else arr[::-1]


def clip_convex(
    subject: Union[np.ndarray, Sequence[Sequence[float]], QuadBox],
    clip: Union[np.ndarray, Sequence[Sequence[float]], QuadBox],
) -> np.ndarray:
    """Intersection of two convex polygons (Sutherland-Hodgman).

    Returns the intersection vertices as an (m, 2) array with positive
    orientation, or an empty (0, 2) array when the polygons are disjoint or the
    overlap is degenerate. Output is convex for convex inputs.
    """
    subj = _oriented_ccw(_as_polygon(subject))
    clp = _oriented_ccw(_as_polygon(clip))
    polygon_area(subj)
    polygon_area(clp)

    output = [tuple(p) for p in subj]
    n = clp.shape[0]
    for i in range(n):
        if not output:
            break
        ax, ay = clp[i]
        bx, by = clp[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        def inside(p: tuple[float, float]) -> bool:
            return ex * (p[1] - ay) - ey * (p[0] - ax) >= -EPS_GEOM

        def intersection(p: tuple[float, float], q: tuple[float, float]) -> tuple[float, float]:
            dx, dy = q[0] - p[0], q[1] - p[1]
            denom = ex * dy - ey * dx
            if abs(denom) < 1e-300:
                return q
            t = (ex * (p[1] - ay) - ey * (p[0] - ax)) / denom
            return (p[0] - t * dx, p[1] - t * dy)

        current = output
        output = []
        prev = current[-1]
        prev_in = inside(prev)
        for point in current:
            point_in = inside(point)
            if point_in:
                if not prev_in:
                    output.append(intersection(prev, point))
                output.append(point)
            elif prev_in:
                output.append(intersection(prev, point))
            prev, prev_in = point, point_in

    if len(output) < 3:
        return np.empty((0, 2))
    arr = np.asarray(output, dtype=float)
    # drop duplicate consecutive vertices introduced by touching edges
    keep = np.linalg.norm(arr - np.roll(arr, 1, axis=0), axis=1) > 1e-12
    arr = arr[keep]
    if arr.shape[0] < 3 or abs(_signed_area(arr)) <= EPS_GEOM:
        return np.empty((0, 2))
    return arr


def convex_hull(points: Union[np.ndarray, Sequence[Sequence[float]]]) -> np.ndarray:
    """Convex hull (monotone chain), counter-clockwise, collinear points dropped.

    Raises DegenerateBoxError when all points are collinear.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise DegenerateBoxError("need at least 3 points in an (n, 2) array")
    if not np.isfinite(arr).all():
        raise DegenerateBoxError("points must be finite")
    pts = sorted({(float(x), float(y)) for x, y in arr})
    if len(pts) < 3:
        raise DegenerateBoxError("points are coincident or collinear")

    def cross(o: Point2, a: Point2, b: Point2) -> float:
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[Point2] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point2] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateBoxError("points are collinear")
    return np.asarray(hull, dtype=float)


def _box_vertices(box: BoxLike) -> np.ndarray:
    if isinstance(box, OrientedRect):
        return box.corners()
    if isinstance(box, QuadBox):
        return box.as_array()
    raise TypeError(f"expected OrientedRect or QuadBox, got {type(box).__name__}")


def hbox_iou(a: HBox, b: HBox) -> float:
    """Intersection over union of two axis-aligned boxes."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return min(inter / (a.area + b.area - inter), 1.0)


def rotated_iou(a: BoxLike, b: BoxLike) -> float:
    """Intersection over union of two (possibly rotated) boxes.

    Exactly symmetric in its arguments and confined to [0, 1].

    Raises:
        DegenerateBoxError: either box has (near-)zero area.
    """
    va = _box_vertices(a)
    vb = _box_vertices(b)
    # symmetric by construction: order the operands canonically so both call
    # orders execute identical arithmetic
    if va.tobytes() > vb.tobytes():
        va, vb = vb, va
    area_a = abs(_signed_area(va))
    area_b = abs(_signed_area(vb))
    if area_a <= EPS_GEOM or area_b <= EPS_GEOM:
        raise DegenerateBoxError("rotated_iou needs boxes with positive area")
    inter_poly = clip_convex(va, vb)
    if inter_poly.shape[0] < 3:
        return 0.0
    inter = abs(_signed_area(inter_poly))
    union = area_a + area_b - inter
    if union <= EPS_GEOM:
        return 1.0
    return min(max(inter / union, 0.0), 1.0)


def aabb_of(box: BoxLike) -> HBox:
    """Tightest axis-aligned box containing the given box's vertices."""
    v = _box_vertices(box)
    x_min, y_min = v.min(axis=0)
    x_max, y_max = v.max(axis=0)
    return HBox(
        x=float((x_min + x_max) / 2),
        y=float((y_min + y_max) / 2),
        w=float(x_max - x_min),
        h=float(y_max - y_min),
    )


def min_area_rect(points: Union[np.ndarray, Sequence[Sequence[float]]]) -> OrientedRect:
    """Minimum-area enclosing rectangle of a point set.

    Rotating calipers over the convex hull: the optimal rectangle has one side
    collinear with a hull edge, so each hull edge direction is tried and the
    smallest-area candidate wins (first such candidate on ties).

    Raises:
        DegenerateBoxError: all points collinear (no enclosing rectangle with
            positive area exists).
    """
    hull = convex_hull(points)
    n = hull.shape[0]
    best: tuple[float, float, float, float, float, float, float] | None = None
    for i in range(n):
        ex, ey = hull[(i + 1) % n] - hull[i]
        norm = math.hypot(ex, ey)
        if norm <= 0:
            continue
        ux, uy = ex / norm, ey / norm
        proj_u = hull[:, 0] * ux + hull[:, 1] * uy
        proj_v = -hull[:, 0] * uy + hull[:, 1] * ux
        u0, u1 = float(proj_u.min()), float(proj_u.max())
        v0, v1 = float(proj_v.min()), float(proj_v.max())
        area = (u1 - u0) * (v1 - v0)
        if best is None or area < best[0]:
            best = (area, u0, u1, v0, v1, ux, uy)
    if best is None:
        raise DegenerateBoxError("cannot fit a rectangle to the given points")
    _, u0, u1, v0, v1, ux, uy = best
    cu, cv = (u0 + u1) / 2, (v0 + v1) / 2
    cx = cu * ux - cv * uy
    cy = cu * uy + cv * ux
    return OrientedRect(cx=cx, cy=cy, w=u1 - u0, h=v1 - v0, theta=math.atan2(uy, ux))
