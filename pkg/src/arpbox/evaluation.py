"""Detection evaluation: rotated-IoU matching, PR curves, AP variants, F-measure.

The protocol is the familiar VOC-style one: per class, detections pooled over
all images are sorted by score and greedily matched against ground truth under
rotated IoU; the resulting precision/recall curve yields the 11-point
interpolated AP and the all-point (envelope-integrated) AP. Ground truths
flagged difficult never count: detections matching them are ignored entirely.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence, Union

import numpy as np

from .geometry import HBox, QuadBox, rotated_iou
from .postprocess import FinalBox

__all__ = [
    "APMetric",
    "GroundTruth",
    "PRCurve",
    "ClassEval",
    "EvalReport",
    "match_detections",
    "ap_voc07",
    "ap_voc12",
    "f_measure",
    "evaluate",
]


class APMetric(Enum):
    VOC07 = "voc07"
    VOC12 = "voc12"


@dataclass(frozen=True)
class GroundTruth:
    """Annotated box for evaluation; difficult ones are scored as neither hit nor miss."""

    box: QuadBox
    class_id: int
    difficult: bool = False


def _as_quad(shape: Union[QuadBox, HBox]) -> QuadBox:
    if isinstance(shape, HBox):
        return QuadBox.from_points(shape.corners())
    return shape


def match_detections(
    dets: Sequence[FinalBox],
    gts: Sequence[GroundTruth],
    iou_thr: float = 0.5,
) -> list[tuple[int, str]]:
    """Greedy TP/FP assignment for one image and one class.

    Detections are visited in descending score order (ties by input position).
    Each one matches the still-unmatched, non-difficult ground truth of highest
    rotated IoU; at or above ``iou_thr`` that is a TP, otherwise the detection
    is an FP unless it overlaps a difficult ground truth at the threshold, in
    which case it is ignored (absent from the output).

    Returns (input index, "tp" | "fp") pairs in visit order.
    """
    if not 0 < iou_thr < 1:
        raise ValueError(f"iou_thr must lie in (0, 1), got {iou_thr}")
    det_quads = [_as_quad(d.shape) for d in dets]
    gt_quads = [g.box for g in gts]
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    matched = [False] * len(gts)
    results: list[tuple[int, str]] = []
    for i in order:
        best_iou, best_j = 0.0, -1
        difficult_hit = False
        for j, gt in enumerate(gts):
            iou = rotated_iou(det_quads[i], gt_quads[j])
            if gt.difficult:
                if iou >= iou_thr:
                    difficult_hit = True
                continue
            if matched[j]:
                continue
            if iou > best_iou:
                best_iou, best_j = iou, j
        if best_j >= 0 and best_iou >= iou_thr:
            matched[best_j] = True
            results.append((i, "tp"))
        elif difficult_hit:
            continue
        else:
            results.append((i, "fp"))
    return results


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall samples in descending-score order, plus the scores."""

    recalls: np.ndarray
    precisions: np.ndarray
    scores: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.recalls, dtype=float)
        p = np.asarray(self.precisions, dtype=float)
        s = np.asarray(self.scores, dtype=float)
        if not (r.shape == p.shape == s.shape and r.ndim == 1):
            raise ValueError("recalls, precisions and scores must be 1-d and equal length")
        if r.size and (np.any(np.diff(r) < -1e-12) or r.min() < 0 or r.max() > 1 + 1e-12):
            raise ValueError("recall must be non-decreasing within [0, 1]")
        if p.size and (p.min() < 0 or p.max() > 1 + 1e-12):
            raise ValueError("precision must lie in [0, 1]")
        object.__setattr__(self, "recalls", r)
        object.__setattr__(self, "precisions", p)
        object.__setattr__(self, "scores", s)

    @classmethod
    def from_matches(
        cls, flags: Sequence[bool], scores: Sequence[float], n_positive: int
    ) -> "PRCurve":
        """Cumulate TP flags (already sorted by descending score) into a curve."""
        tp = np.cumsum(np.asarray(flags, dtype=float))
        fp = np.cumsum(1.0 - np.asarray(flags, dtype=float))
        recall = tp / max(n_positive, 1)
        precision = tp / np.maximum(tp + fp, 1e-12)
        return cls(recalls=recall, precisions=precision, scores=np.asarray(scores, float))


def ap_voc07(curve: PRCurve) -> float:
    """11-point interpolated average precision."""
    if curve.recalls.size == 0:
        return 0.0
    ap = 0.0
    for r in np.linspace(0.0, 1.0, 11):
        mask = curve.recalls >= r - 1e-12
        ap += float(curve.precisions[mask].max()) if mask.any() else 0.0
    return ap / 11.0


def ap_voc12(curve: PRCurve) -> float:
    """All-point average precision: area under the precision envelope."""
    if curve.recalls.size == 0:
        return 0.0
    mrec = np.concatenate(([0.0], curve.recalls, [1.0]))
    mpre = np.concatenate(([0.0], curve.precisions, [0.0]))
    for i in range(mpre.size - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    idx = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]))


def f_measure(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    for name, v in (("precision", precision), ("recall", recall)):
        if not (math.isfinite(v) and 0 <= v <= 1):
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    if precision == 0 and recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ClassEval:
    class_id: int
    ap07: float
    ap12: float
    n_gt: int
    n_det: int


@dataclass(frozen=True)
class EvalReport:
    """Per-class APs plus aggregate mAP and an operating-point P/R/F summary."""

    per_class: Mapping[int, ClassEval]
    map07: float
    map12: float
    precision: float
    recall: float
    f_measure: float
    metric: APMetric
    iou_thr: float
    score_thr: float

    @property
    def mean_ap(self) -> float:
        return self.map07 if self.metric is APMetric.VOC07 else self.map12

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric.value,
            "iou_thr": self.iou_thr,
            "score_thr": self.score_thr,
            "map": self.mean_ap,
            "map07": self.map07,
            "map12": self.map12,
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "per_class": {
                str(cid): {
                    "ap07": ce.ap07,
                    "ap12": ce.ap12,
                    "n_gt": ce.n_gt,
                    "n_det": ce.n_det,
                }
                for cid, ce in sorted(self.per_class.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "ap07", "ap12"])
        for cid, ce in sorted(self.per_class.items()):
            writer.writerow([cid, f"{ce.ap07:.6f}", f"{ce.ap12:.6f}"])
        return buf.getvalue()


def evaluate(
    dets_by_image: Mapping[str, Sequence[FinalBox]],
    gts_by_image: Mapping[str, Sequence[GroundTruth]],
    iou_thr: float = 0.5,
    metric: APMetric = APMetric.VOC07,
    score_thr: float = 0.0,
) -> EvalReport:
    """Pooled PR over all images, per class, then AP and mAP.

    Classes without any ground truth are excluded from the mAP mean (their
    detections still count as false positives at the operating point). The
    operating-point precision/recall/F pool all classes at ``score_thr``.
    Results are invariant to image ordering: cross-image score ties break on
    (image id, in-image position).
    """
    classes: set[int] = set()
    for gts in gts_by_image.values():
        classes.update(g.class_id for g in gts)
    for dets in dets_by_image.values():
        classes.update(d.class_id for d in dets)

    per_class: dict[int, ClassEval] = {}
    op_tp = op_fp = 0
    op_npos = 0
    for cid in sorted(classes):
        flags: list[tuple[float, str, int, bool]] = []
        n_gt = 0
        n_det = 0
        for image_id in sorted(set(dets_by_image) | set(gts_by_image)):
            dets = [d for d in dets_by_image.get(image_id, []) if d.class_id == cid]
            gts = [g for g in gts_by_image.get(image_id, []) if g.class_id == cid]
            n_gt += sum(1 for g in gts if not g.difficult)
            n_det += len(dets)
            for det_idx, label in match_detections(dets, gts, iou_thr=iou_thr):
                flags.append((dets[det_idx].score, image_id, det_idx, label == "tp"))
        flags.sort(key=lambda t: (-t[0], t[1], t[2]))
        scores = [f[0] for f in flags]
        tps = [f[3] for f in flags]
        curve = PRCurve.from_matches(tps, scores, n_positive=n_gt)
        ap07 = ap_voc07(curve) if n_gt else 0.0
        ap12 = ap_voc12(curve) if n_gt else 0.0
        per_class[cid] = ClassEval(class_id=cid, ap07=ap07, ap12=ap12, n_gt=n_gt, n_det=n_det)
        op_npos += n_gt
        for score, _, _, is_tp in flags:
            if score >= score_thr:
                op_tp += int(is_tp)
                op_fp += int(not is_tp)

    with_gt = [ce for ce in per_class.values() if ce.n_gt > 0]
    map07 = float(np.mean([ce.ap07 for ce in with_gt])) if with_gt else 0.0
    map12 = float(np.mean([ce.ap12 for ce in with_gt])) if with_gt else 0.0
    precision = op_tp / (op_tp + op_fp) if (op_tp + op_fp) else 0.0
    recall = op_tp / op_npos if op_npos else 0.0
    return EvalReport(
        per_class=per_class,
        map07=map07,
        map12=map12,
        precision=precision,
        recall=recall,
        f_measure=f_measure(precision, recall),
        metric=metric,
        iou_thr=iou_thr,
        score_thr=score_thr,
    )
