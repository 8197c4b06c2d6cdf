"""Regression losses for oriented boxes in the area-ratio form.

Two box losses are provided: the smooth-L1 form (CIoU on the circumscribed
boxes plus smooth-L1 on the three area ratios) and the rotated-efficient-IoU
form, which replaces the ratio penalties with squared distances between the
parallelogram dimensions of the two boxes, each normalized by the matching
dimension of the smallest box enclosing both parallelograms. A composite
multi-task loss combines the box term with objectness / classification /
obliquity terms under configurable weights.

Everything here is plain scalar math over small records; batching is the
caller's concern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .arp import (
    ArpBox,
    NearHorizontalError,
    arp_from_vector,
    decode_vertices,
    parallelogram_profile,
    vector_from_arp,
)
from .geometry import HBox, OrientedRect, QuadBox, hbox_iou, rotated_iou

__all__ = [
    "EPS_P",
    "BoxLossKind",
    "BoxPair",
    "LossWeights",
    "LossBreakdown",
    "LossSample",
    "smooth_l1",
    "ciou_loss",
    "box_loss_smooth",
    "r_eiou_loss",
    "five_param_smooth_l1",
    "bce_obliquity",
    "multitask_loss",
    "numeric_gradient",
]

# Probability clamp for the binary cross-entropy.
EPS_P = 1e-7
_EPS_DIV = 1e-12


class BoxLossKind(Enum):
    SMOOTH_L1 = "smooth_l1"
    R_EIOU = "r_eiou"


@dataclass(frozen=True)
class BoxPair:
    """A predicted box and its regression target, both in area-ratio form."""

    pred: ArpBox
    target: ArpBox


@dataclass(frozen=True)
class LossWeights:
    """Balancing weights of the composite loss terms."""

    box: float = 0.05
    obj: float = 0.7
    cls: float = 0.3
    alpha: float = 0.8

    def __post_init__(self) -> None:
        for name in ("box", "obj", "cls", "alpha"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"weight {name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossBreakdown:
    """A loss value together with its per-term decomposition."""

    total: float
    terms: Mapping[str, float] = field(default_factory=dict)

    def __getitem__(self, key: str) -> float:
        return self.terms[key]


def _breakdown(**terms: float) -> LossBreakdown:
    return LossBreakdown(total=math.fsum(terms.values()), terms=dict(terms))


def smooth_l1(x: float) -> float:
    """Huber-style penalty: quadratic inside the unit interval, linear outside."""
    ax = abs(x)
    if ax < 1.0:
        return 0.5 * x * x
    return ax - 0.5


def ciou_loss(a: HBox, b: HBox) -> float:
    """Complete-IoU loss between two axis-aligned boxes.

    1 - IoU, plus the squared center distance over the squared enclosing-box
    diagonal, plus the aspect-ratio consistency penalty.
    """
    iou = hbox_iou(a, b)
    ex = max(a.x_max, b.x_max) - min(a.x_min, b.x_min)
    ey = max(a.y_max, b.y_max) - min(a.y_min, b.y_min)
    c2 = ex * ex + ey * ey
    rho2 = (a.x - b.x) ** 2 + (a.y - b.y) ** 2
    v = (4 / math.pi**2) * (math.atan(b.w / b.h) - math.atan(a.w / a.h)) ** 2
    alpha = v / ((1 - iou) + v + 1e-9)
    return (1 - iou) + rho2 / max(c2, _EPS_DIV) + alpha * v


def box_loss_smooth(pair: BoxPair) -> LossBreakdown:
    """CIoU on the circumscribed boxes plus smooth-L1 on the ratio residuals."""
    p, t = pair.pred, pair.target
    ratio = (
        smooth_l1(p.lam1 - t.lam1)
        + smooth_l1(p.lam2 - t.lam2)
        + smooth_l1(p.lam3 - t.lam3)
    )
    return _breakdown(ciou=ciou_loss(p.hbox, t.hbox), area_ratio_l1=ratio)


def _shape_quad(arp: ArpBox) -> QuadBox:
    try:
        return decode_vertices(arp)
    except NearHorizontalError:
        return QuadBox.from_points(arp.hbox.corners())


def r_eiou_loss(pair: BoxPair, use_rotated_iou: bool = False) -> LossBreakdown:
    """Rotated-efficient-IoU loss.

    Terms: (1 - IoU of the circumscribed boxes), the squared center distance
    normalized by the squared enclosing-box diagonal, and the squared
    differences of the two parallelogram dimensions, each normalized by the
    squared width/height of the smallest box enclosing both parallelograms.
    ``use_rotated_iou`` switches the first term to the rotated-box IoU of the
    decoded shapes (experimentation flag; the default follows the horizontal
    definition).
    """
    p, t = pair.pred, pair.target
    bp, bt = p.hbox, t.hbox
    if use_rotated_iou:
        iou = rotated_iou(_shape_quad(p), _shape_quad(t))
    else:
        iou = hbox_iou(bp, bt)
    ex = max(bp.x_max, bt.x_max) - min(bp.x_min, bt.x_min)
    ey = max(bp.y_max, bt.y_max) - min(bp.y_min, bt.y_min)
    c2 = ex * ex + ey * ey
    distance = ((p.x - t.x) ** 2 + (p.y - t.y) ** 2) / max(c2, _EPS_DIV)

    pp = parallelogram_profile(p)
    pt = parallelogram_profile(t)
    c_wpa = max(pp.pa_x_max, pt.pa_x_max) - min(pp.pa_x_min, pt.pa_x_min)
    c_hpb = max(pp.pb_y_max, pt.pb_y_max) - min(pp.pb_y_min, pt.pb_y_min)
    area_ratio = (pp.w_pa - pt.w_pa) ** 2 / max(c_wpa * c_wpa, _EPS_DIV) + (
        pp.h_pb - pt.h_pb
    ) ** 2 / max(c_hpb * c_hpb, _EPS_DIV)
    return _breakdown(iou=1 - iou, distance=distance, area_ratio=area_ratio)


def five_param_smooth_l1(pred: OrientedRect, target: OrientedRect) -> LossBreakdown:
    """Baseline smooth-L1 distance between canonical five-parameter tuples.

    Exposes the angle-wrap discontinuity of the five-parameter convention:
    geometrically adjacent rectangles can differ by a quarter turn (with edge
    exchange) in canonical parameters.
    """
    return _breakdown(
        dx=smooth_l1(pred.cx - target.cx),
        dy=smooth_l1(pred.cy - target.cy),
        dw=smooth_l1(pred.w - target.w),
        dh=smooth_l1(pred.h - target.h),
        dtheta=smooth_l1(pred.theta - target.theta),
    )


def bce_obliquity(alpha: int, p: float) -> float:
    """Binary cross-entropy for the horizontal/oriented label against p(alpha)."""
    if alpha not in (0, 1):
        raise ValueError(f"alpha must be 0 or 1, got {alpha}")
    p = min(max(p, EPS_P), 1 - EPS_P)
    return -(alpha * math.log(p) + (1 - alpha) * math.log(1 - p))


@dataclass(frozen=True)
class LossSample:
    """One anchor's contributions to the composite loss.

    ``obj``, ``alpha`` are (binary label, predicted probability) pairs;
    ``cls`` is one such pair per class. ``mask`` gates the whole sample, the
    anchor-responsibility indicator of the composite loss.
    """

    mask: int
    box_pair: BoxPair
    obj: tuple[int, float]
    cls: tuple[tuple[int, float], ...]
    alpha: tuple[int, float]


def multitask_loss(
    samples: Sequence[LossSample],
    weights: LossWeights = LossWeights(),
    box_loss_kind: BoxLossKind = BoxLossKind.R_EIOU,
    obj_loss: Callable[[int, float], float] = bce_obliquity,
    cls_loss: Callable[[int, float], float] = bce_obliquity,
) -> LossBreakdown:
    """Weighted sum of box, objectness, classification and obliquity losses.

    Objectness and classification are pluggable per-sample scalars (binary
    cross-entropy by default); classification sums over the per-class pairs.
    Samples with ``mask == 0`` contribute nothing. Summation order is fixed by
    sample index, so results are deterministic.
    """
    box_fn = box_loss_smooth if box_loss_kind is BoxLossKind.SMOOTH_L1 else r_eiou_loss
    box_sum = obj_sum = cls_sum = alpha_sum = 0.0
    for sample in samples:
        if sample.mask not in (0, 1):
            raise ValueError(f"mask must be 0 or 1, got {sample.mask}")
        if not sample.mask:
            continue
        box_sum += box_fn(sample.box_pair).total
        obj_sum += obj_loss(*sample.obj)
        cls_sum += math.fsum(cls_loss(label, p) for label, p in sample.cls)
        alpha_sum += bce_obliquity(*sample.alpha)
    return _breakdown(
        box=weights.box * box_sum,
        obj=weights.obj * obj_sum,
        cls=weights.cls * cls_sum,
        alpha=weights.alpha * alpha_sum,
    )


def numeric_gradient(
    f: Callable[[ArpBox], float], at: ArpBox, step: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient of a scalar loss over the seven parameters.

    The probe step scales with each coordinate's magnitude. Probe points are
    projected onto the valid parameter set, so near a constraint boundary the
    estimate degrades to a one-sided difference of the projected function.

    Raises:
        ValueError: the loss evaluates non-finite at a probe point.
    """
    x0 = vector_from_arp(at)
    grad = np.zeros(7)
    for i in range(7):
        hi = step * max(1.0, abs(x0[i]))
        plus = list(x0)
        minus = list(x0)
        plus[i] += hi
        minus[i] -= hi
        f_plus = f(arp_from_vector(plus, clip=True))
        f_minus = f(arp_from_vector(minus, clip=True))
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise ValueError(f"loss is non-finite near coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2 * hi)
    return grad
