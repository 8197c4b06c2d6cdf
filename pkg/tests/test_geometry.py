import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arpbox.geometry import (
    DegenerateBoxError,
    HBox,
    InvalidPolygonError,
    OrientedRect,
    QuadBox,
    aabb_of,
    clip_convex,
    convex_hull,
    hbox_iou,
    min_area_rect,
    polygon_area,
    rotated_iou,
)

from oracles import monte_carlo_iou, sweep_min_rect_area

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def rects(draw_theta=True):
    return st.builds(
        OrientedRect,
        cx=st.floats(-500, 500),
        cy=st.floats(-500, 500),
        w=st.floats(0.5, 400),
        h=st.floats(0.5, 400),
        theta=st.floats(-math.pi / 2, -1e-6) if draw_theta else st.just(-math.pi / 4),
    )


class TestPolygonArea:
    def test_unit_square(self):
        assert polygon_area(UNIT_SQUARE) == 1.0

    def test_right_triangle(self):
        assert polygon_area([(0, 0), (4, 0), (0, 3)]) == 6.0

    def test_collinear_triple_errors(self):
        with pytest.raises(InvalidPolygonError):
            polygon_area([(0, 0), (1, 1), (2, 2)])

    def test_too_few_vertices(self):
        with pytest.raises(InvalidPolygonError):
            polygon_area([(0, 0), (1, 1)])

    def test_orientation_independent(self):
        assert polygon_area(UNIT_SQUARE[::-1]) == 1.0


class TestClipConvex:
    def test_identity(self):
        out = clip_convex(UNIT_SQUARE, UNIT_SQUARE)
        assert polygon_area(out) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint(self):
        other = UNIT_SQUARE + [10.0, 0.0]
        assert clip_convex(UNIT_SQUARE, other).shape == (0, 2)

    def test_half_overlap(self):
        shifted = UNIT_SQUARE + [0.5, 0.0]
        out = clip_convex(UNIT_SQUARE, shifted)
        assert polygon_area(out) == pytest.approx(0.5, abs=1e-12)

    def test_half_overlap_matches_rasterization(self):
        shifted = UNIT_SQUARE + [0.5, 0.0]
        iou = polygon_area(clip_convex(UNIT_SQUARE, shifted)) / 1.5
        assert abs(iou - monte_carlo_iou(UNIT_SQUARE, shifted, 250_000, seed=7)) < 5e-3

    @settings(max_examples=100, deadline=None)
    @given(rects(), rects())
    def test_clip_area_bounded_and_convex(self, a, b):
        out = clip_convex(a.corners(), b.corners())
        if out.shape[0] >= 3:
            area = abs(polygon_area(out))
            assert area <= min(a.area, b.area) * (1 + 1e-9)
            # convex output: every turn has the same sign up to tolerance
            n = out.shape[0]
            scale = max(a.area, b.area)
            for i in range(n):
                p, q, r = out[i], out[(i + 1) % n], out[(i + 2) % n]
                cross = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0])
                assert cross >= -1e-9 * scale

    @settings(max_examples=60, deadline=None)
    @given(rects())
    def test_self_clip_preserves_area(self, r):
        poly = r.corners()
        assert polygon_area(clip_convex(poly, poly)) == pytest.approx(
            polygon_area(poly), rel=1e-9
        )


class TestRotatedIoU:
    def test_identical(self):
        r = OrientedRect(3, 4, 2, 1, -0.3)
        assert rotated_iou(r, r) == 1.0

    def test_offset_unit_squares(self):
        a = OrientedRect(0, 0, 1, 1, -math.pi / 2)
        b = OrientedRect(0.5, 0, 1, 1, -math.pi / 2)
        assert rotated_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)

    def test_square_vs_rotated_45(self):
        a = OrientedRect(0, 0, 1, 1, -math.pi / 2)
        b = OrientedRect(0, 0, 1, 1, -math.pi / 4)
        assert rotated_iou(a, b) == pytest.approx(1 / math.sqrt(2), abs=1e-9)
        mc = monte_carlo_iou(a.corners(), b.corners(), 1_000_000, seed=3)
        assert abs(rotated_iou(a, b) - mc) < 2e-3

    def test_degenerate_box_errors(self):
        tiny = OrientedRect(0, 0, 1e-6, 1e-5, -0.7)
        with pytest.raises(DegenerateBoxError):
            rotated_iou(tiny, tiny)

    @settings(max_examples=100, deadline=None)
    @given(rects(), rects())
    def test_symmetric_and_bounded(self, a, b):
        ab = rotated_iou(a, b)
        ba = rotated_iou(b, a)
        assert ab == ba
        assert 0.0 <= ab <= 1.0

    @settings(max_examples=60, deadline=None)
    @given(rects())
    def test_self_iou_is_one(self, r):
        assert rotated_iou(r, r) == pytest.approx(1.0, abs=1e-9)

    def test_against_monte_carlo(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            a = OrientedRect(
                rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(5, 50),
                rng.uniform(5, 50), rng.uniform(-math.pi / 2, 0),
            )
            b = OrientedRect(
                a.cx + rng.uniform(-20, 20), a.cy + rng.uniform(-20, 20),
                rng.uniform(5, 50), rng.uniform(5, 50), rng.uniform(-math.pi / 2, 0),
            )
            mc = monte_carlo_iou(a.corners(), b.corners(), 1_000_000, seed=100 + trial)
            assert abs(rotated_iou(a, b) - mc) < 2e-3


class TestAabbOf:
    def test_axis_aligned_identity(self):
        r = OrientedRect(5, 6, 4, 2, -math.pi / 2)
        box = aabb_of(r)
        # theta = -pi/2 swaps the roles of the stored edges
        assert (box.x, box.y) == (5, 6)
        assert sorted((box.w, box.h)) == sorted((4, 2))
        assert box.area == pytest.approx(8)

    def test_rotated_square(self):
        r = OrientedRect(0, 0, math.sqrt(2), math.sqrt(2), -math.pi / 4)
        box = aabb_of(r)
        assert (box.x, box.y, box.w, box.h) == pytest.approx((0, 0, 2, 2), abs=1e-12)

    def test_slender_rect_matches_vertex_extrema(self):
        r = OrientedRect(10, -3, 30, 2, -math.pi / 6)
        v = r.corners()
        box = aabb_of(r)
        assert box.x_min == pytest.approx(v[:, 0].min())
        assert box.x_max == pytest.approx(v[:, 0].max())
        assert box.y_min == pytest.approx(v[:, 1].min())
        assert box.y_max == pytest.approx(v[:, 1].max())


class TestMinAreaRect:
    def test_exact_axis_aligned_corners(self):
        pts = [(0, 0), (4, 0), (4, 2), (0, 2)]
        r = min_area_rect(pts)
        assert r.area == pytest.approx(8.0, abs=1e-9)
        assert -math.pi / 2 <= r.theta < 0
        assert (r.cx, r.cy) == pytest.approx((2, 1))

    def test_exact_rotated_corners(self):
        src = OrientedRect(3, -2, 5, 2, -math.pi / 6)
        fitted = min_area_rect(src.corners())
        assert fitted.area == pytest.approx(src.area, abs=1e-9)
        assert (fitted.cx, fitted.cy) == pytest.approx((src.cx, src.cy), abs=1e-9)

    def test_random_cloud_beats_aabb_and_matches_sweep(self):
        rng = np.random.default_rng(5)
        for trial in range(10):
            pts = rng.uniform(0, 100, size=(10, 2))
            rect = min_area_rect(pts)
            aabb_area = np.ptp(pts[:, 0]) * np.ptp(pts[:, 1])
            assert rect.area <= aabb_area * (1 + 1e-9)
            swept = sweep_min_rect_area(pts)
            assert rect.area <= swept * (1 + 1e-9)
            assert swept <= rect.area * (1 + 2e-3)

    def test_contains_all_points(self):
        rng = np.random.default_rng(17)
        pts = rng.uniform(-50, 50, size=(20, 2))
        rect = min_area_rect(pts)
        c, s = math.cos(rect.theta), math.sin(rect.theta)
        rel = pts - [rect.cx, rect.cy]
        u = rel[:, 0] * c + rel[:, 1] * s
        v = -rel[:, 0] * s + rel[:, 1] * c
        assert np.all(np.abs(u) <= rect.w / 2 + 1e-9)
        assert np.all(np.abs(v) <= rect.h / 2 + 1e-9)

    def test_collinear_errors(self):
        with pytest.raises(DegenerateBoxError):
            min_area_rect([(0, 0), (1, 1), (2, 2), (3, 3)])


class TestConvexHull:
    def test_interior_points_dropped(self):
        pts = [(0, 0), (4, 0), (4, 3), (0, 3), (2, 1), (1, 2), (3, 1.5)]
        hull = convex_hull(pts)
        assert hull.shape == (4, 2)
        assert {tuple(p) for p in hull} == {(0, 0), (4, 0), (4, 3), (0, 3)}

    def test_collinear_rejected(self):
        with pytest.raises(DegenerateBoxError):
            convex_hull([(0, 0), (1, 1), (2, 2)])

    def test_positive_orientation(self):
        hull = convex_hull([(0, 0), (4, 0), (4, 3), (0, 3)])
        x, y = hull[:, 0], hull[:, 1]
        signed = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        assert signed > 0


class TestOrientedRectCanonicalization:
    @settings(max_examples=80, deadline=None)
    @given(rects(), st.integers(-2, 2), st.booleans())
    def test_aliases_agree(self, r, turns, swap):
        theta = r.theta + turns * math.pi
        if swap:
            alias = OrientedRect(r.cx, r.cy, r.h, r.w, theta + math.pi / 2)
        else:
            alias = OrientedRect(r.cx, r.cy, r.w, r.h, theta)
        assert np.allclose(alias.corners(), r.corners(), atol=1e-9 * max(r.w, r.h, 1))

    def test_axis_aligned_folds_to_negative_quarter_turn(self):
        r = OrientedRect(0, 0, 4, 2, 0.0)
        assert r.theta == -math.pi / 2
        assert (r.w, r.h) == (2, 4)
        assert aabb_of(r).w == pytest.approx(4)
        assert aabb_of(r).h == pytest.approx(2)

    def test_validation(self):
        with pytest.raises(DegenerateBoxError):
            OrientedRect(0, 0, -1, 2, -0.5)
        with pytest.raises(DegenerateBoxError):
            OrientedRect(0, 0, math.nan, 2, -0.5)


class TestQuadBox:
    def test_from_points_canonical_order(self):
        # 45-degree square given in a rolled, reversed order
        pts = [(0, 1), (1, 0), (0, -1), (-1, 0)]
        q = QuadBox.from_points(pts)
        assert q.left == (-1.0, 0.0)
        assert q.top == (0.0, -1.0)
        assert q.right == (1.0, 0.0)
        assert q.bottom == (0.0, 1.0)

    def test_collinear_rejected(self):
        with pytest.raises(InvalidPolygonError):
            QuadBox.from_points([(0, 0), (1, 1), (2, 2), (3, 3)])

    def test_area(self):
        q = QuadBox.from_points([(0, 0), (2, 0), (2, 1), (0, 1)])
        assert q.area == pytest.approx(2.0)


class TestHBox:
    def test_iou_identity_and_disjoint(self):
        a = HBox(0, 0, 2, 2)
        assert hbox_iou(a, a) == 1.0
        assert hbox_iou(a, HBox(10, 10, 2, 2)) == 0.0

    def test_iou_offset(self):
        a = HBox(0, 0, 1, 1)
        b = HBox(0.5, 0, 1, 1)
        assert hbox_iou(a, b) == pytest.approx(1 / 3)

    def test_validation(self):
        with pytest.raises(DegenerateBoxError):
            HBox(0, 0, 0, 1)


def test_shapely_cross_check():
    shapely = pytest.importorskip("shapely")
    from shapely.geometry import Polygon

    rng = np.random.default_rng(23)
    for _ in range(50):
        a = OrientedRect(
            rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(2, 40),
            rng.uniform(2, 40), rng.uniform(-math.pi / 2, 0),
        )
        b = OrientedRect(
            a.cx + rng.uniform(-30, 30), a.cy + rng.uniform(-30, 30),
            rng.uniform(2, 40), rng.uniform(2, 40), rng.uniform(-math.pi / 2, 0),
        )
        pa, pb = Polygon(a.corners()), Polygon(b.corners())
        inter = pa.intersection(pb).area
        expected = inter / (pa.area + pb.area - inter) if inter else 0.0
        assert rotated_iou(a, b) == pytest.approx(expected, abs=1e-9)
