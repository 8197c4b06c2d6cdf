"""Area-ratio encoding of oriented rectangles.

An oriented rectangle is described by the seven-tuple
``(x, y, w, h, lam1, lam2, lam3)``: the center and size of its minimum
circumscribed (axis-aligned) rectangle plus three area ratios. ``lam1`` is the
ratio of the oriented box's area to the circumscribed rectangle's; ``lam2`` and
``lam3`` are the ratios of two slanted parallelograms (built from the box's
tilted edge direction and the circumscribed rectangle's width/height lines) to
the circumscribed rectangle. The ratios determine the similarity coefficients
of the corner triangles cut off between the box and its circumscribed
rectangle, which in turn recover the vertex positions, so the encoding is
invertible away from axis-aligned inputs.

Nearly axis-aligned boxes are the singular case: one similarity coefficient
diverges and the inversion denominator vanishes. Such inputs raise
:class:`NearHorizontalError` and callers route them through the horizontal-box
convention (``lam = (1, 1, 1)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import (
    DegenerateBoxError,
    GeometryError,
    HBox,
    OrientedRect,
    Point2,
    QuadBox,
    aabb_of,
    min_area_rect,
)

__all__ = [
    "EPS_AXIS",
    "EPS_DEN",
    "NearHorizontalError",
    "ArpBox",
    "KRatios",
    "ObliquityLabel",
    "ParallelogramProfile",
    "encode_arp",
    "encode_arp_lenient",
    "arp_from_hbox",
    "k_ratios",
    "decode_vertices",
    "is_rectangular",
    "obliquity_label",
    "parallelogram_dims",
    "parallelogram_profile",
    "arp_from_vector",
    "vector_from_arp",
    "rect_to_quad",
    "quad_to_rect",
]

# Relative tilt below which encoding refuses and the horizontal path applies.
EPS_AXIS = 1e-6
# Guard for the ratio-inversion denominator.
EPS_DEN = 1e-12


class NearHorizontalError(GeometryError):
    """Box is too close to axis-aligned for the area-ratio inversion."""


class ObliquityLabel(Enum):
    OBB = "obb"
    HBB = "hbb"


@dataclass(frozen=True)
class ArpBox:
    """Seven-parameter oriented-box record.

    (x, y, w, h) describe the minimum circumscribed rectangle; lam1 in (0, 1]
    is the obliquity factor (area ratio of the oriented box to its circumscribed
    rectangle); lam2 and lam3 are the parallelogram area ratios, each >= lam1
    and allowed to exceed 1.
    """

    x: float
    y: float
    w: float
    h: float
    lam1: float
    lam2: float
    lam3: float

    def __post_init__(self) -> None:
        vals = (self.x, self.y, self.w, self.h, self.lam1, self.lam2, self.lam3)
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateBoxError("ArpBox fields must be finite")
        if self.w <= 0 or self.h <= 0:
            raise DegenerateBoxError(f"ArpBox needs positive size, got w={self.w}, h={self.h}")
        if not 0 < self.lam1 <= 1:
            raise DegenerateBoxError(f"lam1 must lie in (0, 1], got {self.lam1}")
        if self.lam2 < self.lam1 or self.lam3 < self.lam1:
            raise DegenerateBoxError(
                f"lam2 and lam3 must be >= lam1, got ({self.lam1}, {self.lam2}, {self.lam3})"
            )

    @property
    def hbox(self) -> HBox:
        return HBox(self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class KRatios:
    """Similarity coefficients of the two corner-triangle pairs."""

    k1: float
    k2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k1) and math.isfinite(self.k2)):
            raise DegenerateBoxError("similarity ratios must be finite")


@dataclass(frozen=True)
class ParallelogramProfile:
    """Dims and axis extents of the two slanted parallelograms of an ArpBox.

    ``w_pa`` is the horizontal base of the width-type parallelogram (area /
    circumscribed height); ``h_pb`` the vertical base of the height-type one.
    The extents give each parallelogram's own axis-aligned span, used to size
    enclosing boxes. Nearly horizontal boxes degrade to the circumscribed
    rectangle itself (``horizontal`` is then True).
    """

    w_pa: float
    h_pb: float
    pa_x_min: float
    pa_x_max: float
    pb_y_min: float
    pb_y_max: float
    horizontal: bool


def encode_arp(rect: OrientedRect) -> ArpBox:
    """Encode an oriented rectangle into the seven-parameter form.

    Raises:
        NearHorizontalError: the rectangle is axis-aligned within ``EPS_AXIS``
            relative tilt; callers should use :func:`arp_from_hbox` instead.
    """
    # for canonical theta in [-pi/2, 0) the edge intersections have closed
    # forms in the rectangle's own size: no coordinate subtraction, so the
    # ratios are translation-invariant exactly and scale-invariant to a few ulp
    c = math.cos(rect.theta)
    sa = -math.sin(rect.theta)  # |sin|, positive in the canonical range
    w1 = c * rect.w
    h1 = sa * rect.w
    w2 = sa * rect.h
    h2 = c * rect.h
    w = w1 + w2
    h = h1 + h2
    scale = max(w, h)
    if h1 < EPS_AXIS * scale or w1 < EPS_AXIS * scale:
        raise NearHorizontalError(
            "rectangle is axis-aligned within tolerance; use the horizontal-box path"
        )
    if w2 <= 0 or h2 <= 0:
        raise DegenerateBoxError("rectangle degenerates to a diagonal of its enclosing box")
    k1 = h1 / h2
    k2 = w1 / w2
    s_h = w * h
    s2 = w2 * h2 / 2
    s1 = k1 * k2 * s2
    s3 = k1 * k1 * s2
    s4 = k2 * k2 * s2
    s_o = s_h - 2 * (s1 + s2)
    if not s_o > 0:
        raise DegenerateBoxError("oriented area collapsed during encoding")
    if abs(s_o - rect.area) > 1e-6 * rect.area:
        raise DegenerateBoxError(
            f"area identity violated during encoding: {s_o} vs {rect.area}"
        )
    lam1 = min(s_o / s_h, 1.0)
    lam2 = lam1 + 2 * (s1 + s3) / s_h
    lam3 = lam1 + 2 * (s1 + s4) / s_h
    return ArpBox(x=rect.cx, y=rect.cy, w=w, h=h, lam1=lam1, lam2=lam2, lam3=lam3)


def arp_from_hbox(box: HBox) -> ArpBox:
    """Horizontal-box convention: the box is its own circumscribed rectangle."""
    return ArpBox(x=box.x, y=box.y, w=box.w, h=box.h, lam1=1.0, lam2=1.0, lam3=1.0)


def encode_arp_lenient(rect: OrientedRect) -> ArpBox:
    """Encode, routing nearly axis-aligned rectangles through the HBox convention."""
    try:
        return encode_arp(rect)
    except NearHorizontalError:
        return arp_from_hbox(aabb_of(rect))


def k_ratios(arp: ArpBox) -> KRatios:
    """Invert the area ratios into the corner-triangle similarity coefficients.

    Raises:
        NearHorizontalError: the inversion denominator is (near) zero, which is
            exactly the nearly-axis-aligned singularity.
    """
    l1, l2, l3 = arp.lam1, arp.lam2, arp.lam3
    den = (1 - l1) * (l2 - l1) + (1 - l2) * (l3 - l1)
    if den <= EPS_DEN:
        raise NearHorizontalError(
            f"ratio inversion denominator {den} underflows; box is nearly horizontal"
        )
    k1 = math.sqrt((l2 - l1) ** 2 / den)
    k2 = math.sqrt((l3 - l1) ** 2 / den)
    return KRatios(k1=k1, k2=k2)


def decode_vertices(arp: ArpBox) -> QuadBox:
    """Recover the four vertices on the circumscribed rectangle's edges.

    The output is always a centrally symmetric parallelogram; it is a rectangle
    exactly when the ratio triple is self-consistent (see
    :func:`is_rectangular`).
    """
    k = k_ratios(arp)
    h1 = k.k1 * arp.h / (1 + k.k1)
    w1 = k.k2 * arp.w / (1 + k.k2)
    x0, y0 = arp.x - arp.w / 2, arp.y - arp.h / 2
    x1, y1 = arp.x + arp.w / 2, arp.y + arp.h / 2
    a = (x0, y0 + h1)
    b = (x0 + w1, y0)
    c = (x1, y1 - h1)
    d = (x1 - w1, y1)
    return QuadBox(vertices=(a, b, c, d))


def is_rectangular(quad: QuadBox, tol: float = 1e-6) -> bool:
    """True when adjacent edges are perpendicular within ``tol`` (relative)."""
    v = quad.as_array()
    for i in range(4):
        e1 = v[(i + 1) % 4] - v[i]
        e2 = v[(i + 2) % 4] - v[(i + 1) % 4]
        n1 = math.hypot(*e1)
        n2 = math.hypot(*e2)
        if n1 <= 0 or n2 <= 0:
            return False
        if abs(float(e1 @ e2)) > tol * n1 * n2:
            return False
    return True


def obliquity_label(lam1: float, lam_thr: float) -> ObliquityLabel:
    """Classify a box as oriented or horizontal from its obliquity factor.

    A low area ratio means a strongly tilted (or slender) box; ratios at or
    above the threshold are treated as horizontal.
    """
    if not 0 < lam1 <= 1:
        raise ValueError(f"lam1 must lie in (0, 1], got {lam1}")
    if not 0 < lam_thr < 1:
        raise ValueError(f"lam_thr must lie in (0, 1), got {lam_thr}")
    return ObliquityLabel.OBB if lam1 < lam_thr else ObliquityLabel.HBB


def parallelogram_profile(arp: ArpBox) -> ParallelogramProfile:
    """Parallelogram dims and extents for an ArpBox.

    Computed through the similarity-coefficient route so that inconsistent
    ratio triples still produce the dims implied by their decoded shape; nearly
    horizontal boxes degrade to the circumscribed rectangle.
    """
    x, y, w, h = arp.x, arp.y, arp.w, arp.h
    try:
        k = k_ratios(arp)
    except NearHorizontalError:
        return ParallelogramProfile(
            w_pa=w,
            h_pb=h,
            pa_x_min=x - w / 2,
            pa_x_max=x + w / 2,
            pb_y_min=y - h / 2,
            pb_y_max=y + h / 2,
            horizontal=True,
        )
    w2 = w / (1 + k.k2)
    w1 = w - w2
    h2 = h / (1 + k.k1)
    h1 = h - h2
    w_pa = w1 + k.k1 * w2
    h_pb = h1 + k.k2 * h2
    # the slanted sides overhang the circumscribed rectangle by k1*w2
    # horizontally (width-type) and k2*h2 vertically (height-type)
    return ParallelogramProfile(
        w_pa=w_pa,
        h_pb=h_pb,
        pa_x_min=x - w / 2 - k.k1 * w2,
        pa_x_max=x + w / 2 + k.k1 * w2,
        pb_y_min=y - h / 2 - k.k2 * h2,
        pb_y_max=y + h / 2 + k.k2 * h2,
        horizontal=False,
    )


def parallelogram_dims(rect: OrientedRect) -> tuple[float, float]:
    """Width of the width-type parallelogram and height of the height-type one.

    Nearly axis-aligned rectangles degrade to their own (w, h): the
    parallelograms coincide with the circumscribed rectangle on that path.
    """
    try:
        arp = encode_arp(rect)
    except NearHorizontalError:
        box = aabb_of(rect)
        return (box.w, box.h)
    profile = parallelogram_profile(arp)
    return (profile.w_pa, profile.h_pb)


def arp_from_vector(values, clip: bool = False) -> ArpBox:
    """Build an ArpBox from a 7-sequence (x, y, w, h, lam1, lam2, lam3).

    With ``clip=True`` the parameters are projected onto the valid set (small
    positive floor on sizes, lam1 into (0, 1], lam2/lam3 raised to lam1), which
    optimization code relies on when probing near the constraint boundary.
    """
    x, y, w, h, l1, l2, l3 = (float(v) for v in values)
    if clip:
        w = max(w, 1e-6)
        h = max(h, 1e-6)
        l1 = min(max(l1, 1e-6), 1.0)
        l2 = max(l2, l1)
        l3 = max(l3, l1)
    return ArpBox(x=x, y=y, w=w, h=h, lam1=l1, lam2=l2, lam3=l3)


def vector_from_arp(arp: ArpBox) -> list[float]:
    """The 7-list (x, y, w, h, lam1, lam2, lam3)."""
    return [arp.x, arp.y, arp.w, arp.h, arp.lam1, arp.lam2, arp.lam3]


def rect_to_quad(rect: OrientedRect) -> QuadBox:
    """Corners of an oriented rectangle in (left, top, right, bottom) order.

    Axis-aligned rectangles have no unique extreme vertices; ties break to
    (top-left, top-right, bottom-right, bottom-left).
    """
    c, s = math.cos(rect.theta), math.sin(rect.theta)
    if min(abs(c), abs(s)) < 1e-12:
        box = aabb_of(rect)
        tl = (box.x_min, box.y_min)
        tr = (box.x_max, box.y_min)
        br = (box.x_max, box.y_max)
        bl = (box.x_min, box.y_max)
        return QuadBox(vertices=(tl, tr, br, bl))
    corners = rect.corners()
    left = int(corners[:, 0].argmin())
    top = int(corners[:, 1].argmin())
    right = int(corners[:, 0].argmax())
    bottom = int(corners[:, 1].argmax())
    if len({left, top, right, bottom}) != 4:
        raise DegenerateBoxError("could not assign unique extreme vertices")
    pts: list[Point2] = [
        (float(corners[i, 0]), float(corners[i, 1])) for i in (left, top, right, bottom)
    ]
    return QuadBox(vertices=tuple(pts))  # type: ignore[arg-type]


def quad_to_rect(quad: QuadBox) -> OrientedRect:
    """Minimum-area enclosing rectangle of a quadrilateral's vertices."""
    return min_area_rect(quad.as_array())
