"""Detection post-processing: rotated NMS and the final horizontal/oriented pick."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from .arp import ArpBox, NearHorizontalError, ObliquityLabel, decode_vertices, obliquity_label
from .geometry import HBox, QuadBox, rotated_iou

__all__ = ["Detection", "FinalBox", "detection_shape", "r_nms", "select_final"]


@dataclass(frozen=True)
class Detection:
    """Scored, classified box prediction in area-ratio form.

    ``obliquity_p`` carries the predicted probability of the oriented/horizontal
    label when available; it defaults to the uninformative 0.5.
    """

    box: ArpBox
    score: float
    class_id: int
    obliquity_p: float = 0.5

    def __post_init__(self) -> None:
        if not (math.isfinite(self.score) and 0 <= self.score <= 1):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if not (math.isfinite(self.obliquity_p) and 0 <= self.obliquity_p <= 1):
            raise ValueError(f"obliquity_p must lie in [0, 1], got {self.obliquity_p}")
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")


@dataclass(frozen=True)
class FinalBox:
    """Post-selection detection: an oriented quad or a plain horizontal box."""

    shape: Union[QuadBox, HBox]
    score: float
    class_id: int

    @property
    def is_horizontal(self) -> bool:
        return isinstance(self.shape, HBox)


def detection_shape(det: Detection) -> QuadBox:
    """Geometry used for overlap tests: decoded quad, or the circumscribed box."""
    try:
        return decode_vertices(det.box)
    except NearHorizontalError:
        return QuadBox.from_points(det.box.hbox.corners())


def r_nms(
    dets: Sequence[Detection],
    iou_thr: float = 0.5,
    score_thr: float = 0.0,
    per_class: bool = True,
) -> list[Detection]:
    """Greedy non-maximum suppression under rotated IoU.

    Detections scoring below ``score_thr`` are dropped; the rest are visited in
    descending score order (ties by input position) and kept iff their rotated
    IoU with every kept detection of the same class stays below ``iou_thr``.
    ``per_class=False`` suppresses across classes. Output preserves the visit
    order of the kept detections.
    """
    if not 0 < iou_thr <= 1:
        raise ValueError(f"iou_thr must lie in (0, 1], got {iou_thr}")
    if not 0 <= score_thr <= 1:
        raise ValueError(f"score_thr must lie in [0, 1], got {score_thr}")
    order = sorted(
        (i for i, d in enumerate(dets) if d.score >= score_thr),
        key=lambda i: (-dets[i].score, i),
    )
    shapes = {i: detection_shape(dets[i]) for i in order}
    kept: list[int] = []
    for i in order:
        key_i = dets[i].class_id if per_class else 0
        suppressed = False
        for j in kept:
            key_j = dets[j].class_id if per_class else 0
            if key_i == key_j and rotated_iou(shapes[i], shapes[j]) >= iou_thr:
                suppressed = True
                break
        if not suppressed:
            kept.append(i)
    return [dets[i] for i in kept]


def select_final(det: Detection, lambda_thr: float = 0.95) -> FinalBox:
    """Pick the horizontal or oriented output form for one detection.

    Boxes whose obliquity factor clears the threshold are emitted as their
    circumscribed horizontal box; the rest decode to an oriented quad. Decode
    failures (the nearly-horizontal singularity) fall back to the horizontal
    box, so this never raises.
    """
    label = obliquity_label(det.box.lam1, lambda_thr)
    if label is ObliquityLabel.HBB:
        return FinalBox(shape=det.box.hbox, score=det.score, class_id=det.class_id)
    try:
        quad = decode_vertices(det.box)
    except NearHorizontalError:
        return FinalBox(shape=det.box.hbox, score=det.score, class_id=det.class_id)
    return FinalBox(shape=quad, score=det.score, class_id=det.class_id)
