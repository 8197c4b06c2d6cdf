import math

import numpy as np
import pytest

from arpbox.evaluation import (
    APMetric,
    GroundTruth,
    PRCurve,
    ap_voc07,
    ap_voc12,
    evaluate,
    f_measure,
    match_detections,
)
from arpbox.geometry import OrientedRect, QuadBox, rotated_iou
from arpbox.postprocess import FinalBox

from oracles import greedy_match_ref


def square_quad(cx, cy, side=10.0):
    half = side / 2
    return QuadBox.from_points(
        [(cx - half, cy - half), (cx + half, cy - half), (cx + half, cy + half), (cx - half, cy + half)]
    )


def det_on(quad, score, class_id=0):
    return FinalBox(shape=quad, score=score, class_id=class_id)


# hand-built three-image set: A and B in img1 (plus a duplicate detection),
# a difficult C in img2 whose detection must be ignored, an undetected D and a
# stray false positive in img3
def three_image_fixture():
    a, b = square_quad(10, 10), square_quad(50, 10)
    c = square_quad(10, 10)
    d = square_quad(10, 10)
    gts = {
        "img1": [GroundTruth(a, 0), GroundTruth(b, 0)],
        "img2": [GroundTruth(c, 0, difficult=True)],
        "img3": [GroundTruth(d, 0)],
    }
    dets = {
        "img1": [det_on(a, 0.9), det_on(a, 0.8), det_on(b, 0.7)],
        "img2": [det_on(c, 0.85)],
        "img3": [det_on(square_quad(200, 200), 0.6)],
    }
    return dets, gts


class TestMatchDetections:
    def test_single_hit(self):
        gt = square_quad(10, 10)
        out = match_detections([det_on(gt, 0.9)], [GroundTruth(gt, 0)], iou_thr=0.5)
        assert out == [(0, "tp")]

    def test_double_detection(self):
        gt = square_quad(10, 10)
        dets = [det_on(gt, 0.7), det_on(gt, 0.9)]
        out = match_detections(dets, [GroundTruth(gt, 0)], iou_thr=0.5)
        assert out == [(1, "tp"), (0, "fp")]

    def test_difficult_ignored(self):
        gt = square_quad(10, 10)
        out = match_detections(
            [det_on(gt, 0.9)], [GroundTruth(gt, 0, difficult=True)], iou_thr=0.5
        )
        assert out == []

    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n_det, n_gt = int(rng.integers(1, 11)), int(rng.integers(1, 11))
            det_quads = []
            scores = []
            for _ in range(n_det):
                rect = OrientedRect(
                    rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(6, 30),
                    rng.uniform(6, 30), rng.uniform(-math.pi / 2 + 0.05, -0.05),
                )
                from arpbox.arp import rect_to_quad

                det_quads.append(rect_to_quad(rect))
                scores.append(round(float(rng.uniform(0.1, 0.99)), 3))
            gts = []
            for _ in range(n_gt):
                rect = OrientedRect(
                    rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(6, 30),
                    rng.uniform(6, 30), rng.uniform(-math.pi / 2 + 0.05, -0.05),
                )
                from arpbox.arp import rect_to_quad

                gts.append(
                    GroundTruth(rect_to_quad(rect), 0, difficult=bool(rng.random() < 0.2))
                )
            dets = [det_on(q, s) for q, s in zip(det_quads, scores)]
            out = match_detections(dets, gts, iou_thr=0.5)
            iou_matrix = [
                [rotated_iou(q, g.box) for g in gts] for q in det_quads
            ]
            ref = greedy_match_ref(scores, iou_matrix, [g.difficult for g in gts], 0.5)
            assert out == ref


class TestAp:
    def test_perfect_detector(self):
        curve = PRCurve(
            recalls=np.array([0.5, 1.0]), precisions=np.array([1.0, 1.0]),
            scores=np.array([0.9, 0.8]),
        )
        assert ap_voc07(curve) == pytest.approx(1.0)
        assert ap_voc12(curve) == pytest.approx(1.0)

    def test_no_tp(self):
        curve = PRCurve(
            recalls=np.zeros(3), precisions=np.zeros(3), scores=np.array([0.9, 0.5, 0.1])
        )
        assert ap_voc07(curve) == 0.0
        assert ap_voc12(curve) == 0.0

    def test_empty_curve(self):
        curve = PRCurve(recalls=np.array([]), precisions=np.array([]), scores=np.array([]))
        assert ap_voc07(curve) == 0.0
        assert ap_voc12(curve) == 0.0

    def test_two_point_curve_11pt(self):
        curve = PRCurve(
            recalls=np.array([0.5, 1.0]), precisions=np.array([1.0, 0.5]),
            scores=np.array([0.9, 0.8]),
        )
        assert ap_voc07(curve) == pytest.approx((6 * 1.0 + 5 * 0.5) / 11, abs=1e-12)

    def test_two_point_curve_all_point(self):
        curve = PRCurve(
            recalls=np.array([0.5, 1.0]), precisions=np.array([1.0, 0.5]),
            scores=np.array([0.9, 0.8]),
        )
        assert ap_voc12(curve) == pytest.approx(0.75, abs=1e-12)

    def test_envelope_dominates_trapezoid(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            flags = rng.random(n) < 0.5
            scores = np.sort(rng.random(n))[::-1]
            npos = int(flags.sum()) + int(rng.integers(0, 4))
            curve = PRCurve.from_matches(flags.tolist(), scores.tolist(), max(npos, 1))
            trapz = float(
                np.trapezoid(
                    np.concatenate(([0.0], curve.precisions)),
                    np.concatenate(([0.0], curve.recalls)),
                )
            )
            assert ap_voc12(curve) >= trapz - 1e-12


class TestFMeasure:
    def test_perfect(self):
        assert f_measure(1, 1) == 1.0

    def test_reported_operating_point(self):
        assert f_measure(0.8628, 0.8343) == pytest.approx(0.8483, abs=5e-5)

    def test_zero_precision(self):
        assert f_measure(0, 0.5) == 0.0

    def test_both_zero(self):
        assert f_measure(0, 0) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            f_measure(1.5, 0.5)


class TestEvaluate:
    def test_empty_detections(self):
        _, gts = three_image_fixture()
        report = evaluate({}, gts)
        assert report.map07 == 0.0
        assert report.map12 == 0.0

    def test_hand_computed_fixture(self):
        dets, gts = three_image_fixture()
        report = evaluate(dets, gts, iou_thr=0.5)
        assert report.per_class[0].ap07 == pytest.approx(6 / 11, abs=1e-12)
        assert report.per_class[0].ap12 == pytest.approx(5 / 9, abs=1e-12)
        assert report.map07 == pytest.approx(6 / 11, abs=1e-12)
        # at score_thr 0: tp=2, fp=2 (duplicate + stray), ignored det absent
        assert report.precision == pytest.approx(0.5)
        assert report.recall == pytest.approx(2 / 3)

    def test_image_order_invariance(self):
        dets, gts = three_image_fixture()
        report1 = evaluate(dets, gts)
        dets2 = dict(reversed(list(dets.items())))
        gts2 = dict(reversed(list(gts.items())))
        report2 = evaluate(dets2, gts2)
        assert report1.map07 == report2.map07
        assert report1.map12 == report2.map12
        assert report1.precision == report2.precision

    def test_within_image_reordering_invariance(self):
        # distinct scores: shuffling detections inside an image cannot move
        # anything in the pooled score ordering
        dets, gts = three_image_fixture()
        report1 = evaluate(dets, gts)
        dets2 = {k: list(reversed(v)) for k, v in dets.items()}
        report2 = evaluate(dets2, gts)
        assert report1.map07 == report2.map07
        assert report1.map12 == report2.map12
        assert report1.f_measure == report2.f_measure

    def test_duplicate_fp_never_increases_ap(self):
        dets, gts = three_image_fixture()
        base = evaluate(dets, gts)
        dets_extra = {k: list(v) for k, v in dets.items()}
        dets_extra["img1"] = dets_extra["img1"] + [det_on(square_quad(10, 10), 0.85)]
        more = evaluate(dets_extra, gts)
        assert more.per_class[0].ap07 <= base.per_class[0].ap07 + 1e-12
        assert more.per_class[0].ap12 <= base.per_class[0].ap12 + 1e-12

    def test_class_without_gt_excluded_from_map(self):
        dets, gts = three_image_fixture()
        dets = {k: list(v) for k, v in dets.items()}
        dets["img1"] = dets["img1"] + [det_on(square_quad(90, 90), 0.4, class_id=5)]
        report = evaluate(dets, gts)
        assert report.per_class[5].n_gt == 0
        assert report.map07 == pytest.approx(6 / 11, abs=1e-12)

    def test_metric_selector(self):
        dets, gts = three_image_fixture()
        r07 = evaluate(dets, gts, metric=APMetric.VOC07)
        r12 = evaluate(dets, gts, metric=APMetric.VOC12)
        assert r07.mean_ap == pytest.approx(6 / 11, abs=1e-12)
        assert r12.mean_ap == pytest.approx(5 / 9, abs=1e-12)

    def test_serialization(self):
        dets, gts = three_image_fixture()
        report = evaluate(dets, gts)
        payload = report.to_json_dict()
        assert payload["map07"] == report.map07
        assert "0" in payload["per_class"]
        csv_text = report.to_csv()
        lines = csv_text.strip().splitlines()
        assert lines[0] == "class,ap07,ap12"
        assert lines[1].startswith("0,")
