import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import boxes
from oracles import ref_giou, ref_iou
from pidgraph.geometry import (
    LineSegment,
    Point,
    giou,
    giou_matrix,
    iou,
    iou_matrix,
    point_segment_distance,
    segment_intersection,
)
from pidgraph.graph import BBox


def seg(x0, y0, x1, y1):
    return LineSegment.from_coords(x0, y0, x1, y1)


def test_iou_examples():
    a = BBox(0, 0, 2, 2)
    assert iou(a, a) == 1.0
    assert iou(a, BBox(5, 5, 6, 6)) == 0.0
    assert iou(a, BBox(1, 0, 3, 2)) == pytest.approx(1 / 3)


def test_iou_touching_boxes_is_zero():
    assert iou(BBox(0, 0, 1, 1), BBox(1, 0, 2, 1)) == 0.0


def test_iou_zero_area():
    p = BBox(3, 3, 3, 3)
    assert iou(p, p) == 1.0
    assert iou(p, BBox(0, 0, 5, 5)) == 0.0


def test_giou_examples():
    a = BBox(0, 0, 1, 1)
    assert giou(a, a) == 1.0
    assert giou(a, BBox(1, 1, 2, 2)) == -0.5


def test_giou_rejects_zero_area():
    with pytest.raises(ValueError):
        giou(BBox(0, 0, 0, 1), BBox(0, 0, 1, 1))


@settings(max_examples=200, deadline=None)
@given(boxes(), boxes())
def test_iou_giou_properties(a, b):
    assert iou(a, b) == pytest.approx(iou(b, a), abs=1e-12)
    assert giou(a, b) == pytest.approx(giou(b, a), abs=1e-12)
    assert giou(a, b) <= iou(a, b) + 1e-12
    assert 0.0 <= iou(a, b) <= 1.0
    assert -1.0 < giou(a, b) <= 1.0
    assert iou(a, b) == pytest.approx(ref_iou(a, b), abs=1e-9)
    assert giou(a, b) == pytest.approx(ref_giou(a, b), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(boxes(), boxes(), st.floats(-500, 500), st.floats(-500, 500))
def test_translation_invariance(a, b, dx, dy):
    ta, tb = a.translate(dx, dy), b.translate(dx, dy)
    assert iou(ta, tb) == pytest.approx(iou(a, b), abs=1e-6)
    assert giou(ta, tb) == pytest.approx(giou(a, b), abs=1e-6)


def test_matrices_match_scalar_versions():
    rng = np.random.default_rng(3)
    bs = []
    for _ in range(12):
        x, y = rng.uniform(0, 100, 2)
        w, h = rng.uniform(1, 50, 2)
        bs.append(BBox(x, y, x + w, y + h))
    im, gm = iou_matrix(bs[:5], bs[5:]), giou_matrix(bs[:5], bs[5:])
    for i in range(5):
        for j in range(7):
            assert im[i, j] == pytest.approx(iou(bs[i], bs[5 + j]), abs=1e-12)
            assert gm[i, j] == pytest.approx(giou(bs[i], bs[5 + j]), abs=1e-12)


def test_segment_rejects_degenerate():
    with pytest.raises(ValueError):
        seg(1, 1, 1, 1)


def test_segment_intersection_examples():
    assert segment_intersection(seg(0, 5, 10, 5), seg(5, 0, 5, 10)) == Point(5, 5)
    assert segment_intersection(seg(0, 0, 10, 0), seg(0, 3, 10, 3)) is None
    p = segment_intersection(seg(0, 0, 4, 4), seg(0, 4, 4, 0))
    assert (p.x, p.y) == pytest.approx((2, 2))


def test_collinear_overlap_is_none():
    assert segment_intersection(seg(0, 0, 10, 0), seg(5, 0, 15, 0)) is None


def test_disjoint_segments():
    assert segment_intersection(seg(0, 0, 1, 0), seg(3, -1, 3, 1)) is None


@settings(max_examples=200, deadline=None)
@given(*[st.integers(-50, 50) for _ in range(8)])
def test_intersection_symmetric_and_on_both(a, b, c, d, e, f, g, h):
    if (a, b) == (c, d) or (e, f) == (g, h):
        return
    s1, s2 = seg(a, b, c, d), seg(e, f, g, h)
    p, q = segment_intersection(s1, s2), segment_intersection(s2, s1)
    assert (p is None) == (q is None)
    if p is not None:
        assert (p.x, p.y) == pytest.approx((q.x, q.y), abs=1e-9)
        assert point_segment_distance(p, s1) < 1e-6
        assert point_segment_distance(p, s2) < 1e-6


def test_point_segment_distance_examples():
    s = seg(0, 0, 10, 0)
    assert point_segment_distance(Point(4, 0), s) == 0
    assert point_segment_distance(Point(0, 1), s) == 1
    assert point_segment_distance(Point(-3, 4), s) == 5


def test_segment_properties():
    s = seg(0, 0, 3, 4)
    assert s.length == 5
    assert s.midpoint == Point(1.5, 2)
    assert math.isclose(seg(0, 0, 1, 1).angle, 45.0)
