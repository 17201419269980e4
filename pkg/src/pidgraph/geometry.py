"""Box and segment primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import BBox
from . import kernels

EPS = 1e-6


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y

    def dist(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class LineSegment:
    p0: Point
    p1: Point
    solid: bool = True

    def __post_init__(self) -> None:
        if self.p0 == self.p1:
            raise ValueError(f"degenerate segment at ({self.p0.x}, {self.p0.y})")

    @classmethod
    def from_coords(cls, x0: float, y0: float, x1: float, y1: float, solid: bool = True) -> "LineSegment":
        return cls(Point(float(x0), float(y0)), Point(float(x1), float(y1)), solid)

    @property
    def length(self) -> float:
        return self.p0.dist(self.p1)

    @property
    def midpoint(self) -> Point:
        return Point((self.p0.x + self.p1.x) / 2.0, (self.p0.y + self.p1.y) / 2.0)

    @property
    def angle(self) -> float:
        """Undirected orientation in degrees, [0, 180)."""
        return math.degrees(math.atan2(self.p1.y - self.p0.y, self.p1.x - self.p0.x)) % 180.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p0.x, self.p0.y, self.p1.x, self.p1.y)


def angle_diff(a: float, b: float) -> float:
    """Smallest difference between two undirected orientations (degrees)."""
    d = abs(a - b) % 180.0
    return min(d, 180.0 - d)


def boxes_array(boxes: Sequence[BBox]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4))
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64)


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = a.area + b.area - inter
    if union <= 0:
        return 1.0 if a == b else 0.0
    return inter / union


def giou(a: BBox, b: BBox) -> float:
    if a.area <= 0 or b.area <= 0:
        raise ValueError("giou is undefined for zero-area boxes")
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = a.area + b.area - inter
    hull = (max(a.x_max, b.x_max) - min(a.x_min, b.x_min)) * (max(a.y_max, b.y_max) - min(a.y_min, b.y_min))
    return inter / union - (hull - union) / hull


def iou_matrix(a: Sequence[BBox], b: Sequence[BBox]) -> np.ndarray:
    return kernels.pairwise_iou(boxes_array(a), boxes_array(b))


def giou_matrix(a: Sequence[BBox], b: Sequence[BBox]) -> np.ndarray:
    return kernels.pairwise_giou(boxes_array(a), boxes_array(b))


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def segment_intersection(s1: LineSegment, s2: LineSegment) -> Point | None:
    """Single intersection point of two closed segments, or None.

    Parallel and collinear-overlapping pairs return None.
    """
    px, py = s1.p0.x, s1.p0.y
    rx, ry = s1.p1.x - px, s1.p1.y - py
    qx, qy = s2.p0.x, s2.p0.y
    sx, sy = s2.p1.x - qx, s2.p1.y - qy
    denom = _cross(rx, ry, sx, sy)
    scale = math.hypot(rx, ry) * math.hypot(sx, sy)
    if scale == 0 or abs(denom) <= 1e-12 * scale:
        return None
    t = _cross(qx - px, qy - py, sx, sy) / denom
    u = _cross(qx - px, qy - py, rx, ry) / denom
    tol_t = EPS / math.hypot(rx, ry)
    tol_u = EPS / math.hypot(sx, sy)
    if -tol_t <= t <= 1 + tol_t and -tol_u <= u <= 1 + tol_u:
        t = min(max(t, 0.0), 1.0)
        return Point(px + t * rx, py + t * ry)
    return None


def project_param(p: Point, s: LineSegment) -> float:
    """Parameter of the orthogonal projection of p onto the supporting line of s."""
    dx, dy = s.p1.x - s.p0.x, s.p1.y - s.p0.y
    ll = dx * dx + dy * dy
    if ll == 0:
        return 0.0
    return ((p.x - s.p0.x) * dx + (p.y - s.p0.y) * dy) / ll


def point_segment_distance(p: Point, s: LineSegment) -> float:
    t = min(max(project_param(p, s), 0.0), 1.0)
    fx = s.p0.x + t * (s.p1.x - s.p0.x)
    fy = s.p0.y + t * (s.p1.y - s.p0.y)
    return math.hypot(p.x - fx, p.y - fy)


def point_box_distance(x: float, y: float, box: BBox) -> float:
    dx = max(box.x_min - x, 0.0, x - box.x_max)
    dy = max(box.y_min - y, 0.0, y - box.y_max)
    return math.hypot(dx, dy)


def clip_segment_to_box(x0: float, y0: float, x1: float, y1: float, box: BBox) -> tuple[float, float] | None:
    """Liang-Barsky clip; returns the (t_enter, t_exit) parameter range inside the closed box."""
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - box.x_min), (dx, box.x_max - x0), (-dy, y0 - box.y_min), (dy, box.y_max - y0)):
        if p == 0:
            if q < 0:
                return None
            continue
        r = q / p
        if p < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
        if t0 > t1:
            return None
    return t0, t1
