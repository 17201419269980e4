"""Line extraction: binarization, masking, morphological H/V runs, thinning + Hough, dash grouping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import cv2
import numpy as np
from skimage.filters import threshold_minimum, threshold_otsu
from skimage.morphology import skeletonize
from sklearn.cluster import DBSCAN

from ..geometry import LineSegment, Point, angle_diff
from ..graph import BBox


@dataclass(frozen=True)
class LineParams:
    bin_threshold_mode: str = "fixed"
    hv_kernel_len: int = 25
    min_hv_run: int = 30
    max_line_width: int = 12
    hough_threshold: int = 5
    hough_min_len: int = 5
    hough_max_gap: int = 2
    erase_radius: int = 3
    dash_max_len: float = 18.0
    dbscan_eps: float = 30.0
    dbscan_min_pts: int = 3
    dash_angle_tol: float = 15.0
    collinear_angle_tol: float = 5.0
    collinear_gap_tol: float = 10.0
    collinear_offset_tol: float = 4.0
    dedupe_radius: float = 12.0

    def __post_init__(self) -> None:
        if self.bin_threshold_mode not in ("fixed", "adaptive"):
            raise ValueError("bin_threshold_mode must be 'fixed' or 'adaptive'")
        for name, val in self.__dict__.items():
            if name != "bin_threshold_mode" and not val > 0:
                raise ValueError(f"{name} must be positive")


def binarize(image: np.ndarray, mode: str = "fixed") -> np.ndarray:
    """Boolean ink mask. ``adaptive`` picks the valley of the grey-level histogram."""
    if image.ndim == 3:
        image = cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    if mode == "fixed":
        return image < 128
    if mode != "adaptive":
        raise ValueError(f"unknown mode {mode!r}")
    lo, hi = int(image.min()), int(image.max())
    if lo == hi:
        return np.full(image.shape, lo < 128)
    try:
        t = threshold_minimum(image)
    except RuntimeError:
        t = threshold_otsu(image)
    return image <= t


def mask_regions(binary: np.ndarray, boxes: Sequence[BBox], pad: float = 0.0) -> np.ndarray:
    out = binary.copy()
    h, w = out.shape[:2]
    for b in boxes:
        x0 = max(int(math.floor(b.x_min - pad)), 0)
        y0 = max(int(math.floor(b.y_min - pad)), 0)
        x1 = min(int(math.ceil(b.x_max + pad)), w)
        y1 = min(int(math.ceil(b.y_max + pad)), h)
        if x1 > x0 and y1 > y0:
            out[y0:y1, x0:x1] = False
    return out


def _runs(mask: np.ndarray, horizontal: bool, params: LineParams) -> list[LineSegment]:
    n, _, stats, _ = cv2.connectedComponentsWithStats(mask.view(np.uint8), connectivity=8)
    segs = []
    for x, y, w, h, _area in stats[1:]:
        length, thick = (w, h) if horizontal else (h, w)
        if length < params.min_hv_run or thick > params.max_line_width:
            continue
        if horizontal:
            yc = y + (h - 1) / 2.0
            segs.append(LineSegment.from_coords(x, yc, x + w - 1, yc))
        else:
            xc = x + (w - 1) / 2.0
            segs.append(LineSegment.from_coords(xc, y, xc, y + h - 1))
    return segs


def detect_hv_lines(binary: np.ndarray, params: LineParams | None = None) -> list[LineSegment]:
    """Opening with 1xL and Lx1 kernels, one segment per connected run."""
    params = params or LineParams()
    img = binary.astype(np.uint8)
    k = params.hv_kernel_len
    horiz = cv2.morphologyEx(img, cv2.MORPH_OPEN, np.ones((1, k), np.uint8)).astype(bool)
    vert = cv2.morphologyEx(img, cv2.MORPH_OPEN, np.ones((k, 1), np.uint8)).astype(bool)
    return _runs(horiz, True, params) + _runs(vert, False, params)


def erase_segments(binary: np.ndarray, segments: Sequence[LineSegment], radius: int) -> np.ndarray:
    """Clear every pixel within ``radius`` of the given segments."""
    if not segments:
        return binary.copy()
    ink = np.zeros(binary.shape, np.uint8)
    for s in segments:
        p0 = (int(round(s.p0.x)), int(round(s.p0.y)))
        p1 = (int(round(s.p1.x)), int(round(s.p1.y)))
        cv2.line(ink, p0, p1, 1, thickness=2 * radius + 1)
    return binary & (ink == 0)


def detect_diagonal_lines(
    binary: np.ndarray,
    already_found: Sequence[LineSegment],
    params: LineParams | None = None,
) -> list[LineSegment]:
    """Thin what is left after removing known lines, then run probabilistic Hough."""
    params = params or LineParams()
    rest = erase_segments(binary, already_found, params.erase_radius)
    if not rest.any():
        return []
    pieces, rest = _small_pieces(rest, params)
    if not rest.any():
        return pieces
    skel = skeletonize(rest).astype(np.uint8) * 255
    found = cv2.HoughLinesP(
        skel,
        rho=1,
        theta=np.pi / 180,
        threshold=params.hough_threshold,
        minLineLength=params.hough_min_len,
        maxLineGap=params.hough_max_gap,
    )
    if found is None:
        return pieces
    segs = [LineSegment.from_coords(*map(float, l)) for l in np.asarray(found).reshape(-1, 4)]
    segs.sort(key=lambda s: s.as_tuple())
    out = []
    for s in segs:
        dup = any(
            angle_diff(s.angle, f.angle) < params.collinear_angle_tol
            and s.midpoint.dist(f.midpoint) < params.dedupe_radius
            for f in already_found
        )
        if not dup:
            out.append(s)
    long = [s for s in out if s.length > params.dash_max_len]
    short = [s for s in out if s.length <= params.dash_max_len]
    return merge_collinear(long, params) + short + pieces


def _small_pieces(binary: np.ndarray, params: LineParams) -> tuple[list[LineSegment], np.ndarray]:
    """Fit a segment to every small elongated blob and remove all small blobs.

    Probabilistic Hough samples pixels at random and regularly loses short
    dashes, so those are taken straight from connected components. Compact
    blobs (dash corners, leftover specks) are dropped without a segment.
    """
    n, labels, stats, _ = cv2.connectedComponentsWithStats(binary.astype(np.uint8), connectivity=8)
    rest = binary.copy()
    out = []
    for k in range(1, n):
        x, y, w, h, _area = stats[k]
        if max(w, h) > params.dash_max_len + 2:
            continue
        ys, xs = np.nonzero(labels[y : y + h, x : x + w] == k)
        rest[y + ys, x + xs] = False
        if len(xs) < 3:
            continue
        pts = np.column_stack([xs + x, ys + y]).astype(np.float64)
        c = pts.mean(axis=0)
        _, sv, vt = np.linalg.svd(pts - c, full_matrices=False)
        if len(sv) < 2 or sv[0] < 2.0 * sv[1]:
            continue
        t = (pts - c) @ vt[0]
        a, b = c + t.min() * vt[0], c + t.max() * vt[0]
        out.append(LineSegment.from_coords(float(a[0]), float(a[1]), float(b[0]), float(b[1])))
    out.sort(key=lambda s: s.as_tuple())
    return out, rest


def _direction(angles_deg: np.ndarray) -> float:
    """Mean undirected orientation (degrees) via doubled-angle averaging."""
    a = np.radians(angles_deg) * 2.0
    return math.degrees(math.atan2(np.sin(a).mean(), np.cos(a).mean()) / 2.0) % 180.0


def _split_sorted(values: np.ndarray, gap: float) -> list[np.ndarray]:
    order = np.argsort(values, kind="stable")
    groups, cur = [], [order[0]]
    for a, b in zip(order, order[1:]):
        if values[b] - values[a] > gap:
            groups.append(np.array(cur))
            cur = []
        cur.append(b)
    groups.append(np.array(cur))
    return groups


def _dash_runs(dashes: list[LineSegment], params: LineParams) -> list[list[LineSegment]]:
    """Split one DBSCAN cluster into straight runs: orientation, then offset, then along-line gaps."""
    by_angle: list[list[LineSegment]] = []
    for d in sorted(dashes, key=lambda s: s.angle):
        for grp in by_angle:
            if angle_diff(_direction(np.array([g.angle for g in grp])), d.angle) <= params.dash_angle_tol:
                grp.append(d)
                break
        else:
            by_angle.append([d])
    runs = []
    for grp in by_angle:
        theta = math.radians(_direction(np.array([g.angle for g in grp])))
        u = np.array([math.cos(theta), math.sin(theta)])
        nrm = np.array([-u[1], u[0]])
        mids = np.array([[g.midpoint.x, g.midpoint.y] for g in grp])
        for off_idx in _split_sorted(mids @ nrm, params.collinear_offset_tol):
            sub = [grp[i] for i in off_idx]
            ends = np.array([[s.p0.x, s.p0.y, s.p1.x, s.p1.y] for s in sub])
            lo = np.minimum(ends[:, :2] @ u, ends[:, 2:] @ u)
            hi = np.maximum(ends[:, :2] @ u, ends[:, 2:] @ u)
            order = np.argsort(lo, kind="stable")
            cur = [order[0]]
            reach = hi[order[0]]
            for i in order[1:]:
                if lo[i] - reach > params.dbscan_eps:
                    runs.append([sub[j] for j in cur])
                    cur = []
                cur.append(i)
                reach = max(reach, hi[i])
            runs.append([sub[j] for j in cur])
    return runs


def _span(segs: Sequence[LineSegment], solid: bool) -> LineSegment:
    """Least-squares line through all endpoints, clipped to their extent."""
    pts = np.array([[s.p0.x, s.p0.y] for s in segs] + [[s.p1.x, s.p1.y] for s in segs])
    c = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - c, full_matrices=False)
    u = vt[0]
    t = (pts - c) @ u
    a, b = c + t.min() * u, c + t.max() * u
    return LineSegment(Point(float(a[0]), float(a[1])), Point(float(b[0]), float(b[1])), solid)


def cluster_dashes(segments: Sequence[LineSegment], params: LineParams | None = None) -> list[LineSegment]:
    """Group short pieces into dashed (non-solid) lines; everything else passes through."""
    params = params or LineParams()
    dashes = [s for s in segments if s.length <= params.dash_max_len]
    others = [s for s in segments if s.length > params.dash_max_len]
    if not dashes:
        return list(others)
    mids = np.array([[s.midpoint.x, s.midpoint.y] for s in dashes])
    labels = DBSCAN(eps=params.dbscan_eps, min_samples=params.dbscan_min_pts).fit_predict(mids)
    out = list(others)
    for k in range(int(labels.max()) + 1):
        members = [dashes[i] for i in np.flatnonzero(labels == k)]
        for run in _dash_runs(members, params):
            if len(run) >= params.dbscan_min_pts:
                out.append(_span(run, solid=False))
            else:
                out.extend(run)
    out.extend(dashes[i] for i in np.flatnonzero(labels < 0))
    return out


def _mergeable(a: LineSegment, b: LineSegment, params: LineParams) -> bool:
    if a.solid != b.solid or angle_diff(a.angle, b.angle) > params.collinear_angle_tol:
        return False
    ref = a if a.length >= b.length else b
    other = b if ref is a else a
    if ref.length == 0:
        return ref.p0.dist(other.p0) <= params.collinear_gap_tol
    theta = math.radians(ref.angle)
    u = (math.cos(theta), math.sin(theta))
    n = (-u[1], u[0])
    ox, oy = ref.p0.x, ref.p0.y
    for p in (other.p0, other.p1):
        if abs((p.x - ox) * n[0] + (p.y - oy) * n[1]) > params.collinear_offset_tol:
            return False
    ta = sorted(((p.x - ox) * u[0] + (p.y - oy) * u[1]) for p in (ref.p0, ref.p1))
    tb = sorted(((p.x - ox) * u[0] + (p.y - oy) * u[1]) for p in (other.p0, other.p1))
    gap = max(ta[0], tb[0]) - min(ta[1], tb[1])
    return gap <= params.collinear_gap_tol


def _merge_pair(a: LineSegment, b: LineSegment) -> LineSegment:
    ref = a if a.length >= b.length else b
    theta = math.radians(ref.angle)
    u = (math.cos(theta), math.sin(theta))
    ox, oy = ref.p0.x, ref.p0.y
    pts = [a.p0, a.p1, b.p0, b.p1]
    ts = [(p.x - ox) * u[0] + (p.y - oy) * u[1] for p in pts]
    lo, hi = pts[int(np.argmin(ts))], pts[int(np.argmax(ts))]
    # keep the reference line's offset so axis-aligned runs stay axis-aligned
    a_pt = Point(ox + min(ts) * u[0], oy + min(ts) * u[1])
    b_pt = Point(ox + max(ts) * u[0], oy + max(ts) * u[1])
    if ref.p0.x == ref.p1.x:
        a_pt, b_pt = Point(ref.p0.x, lo.y), Point(ref.p0.x, hi.y)
    elif ref.p0.y == ref.p1.y:
        a_pt, b_pt = Point(lo.x, ref.p0.y), Point(hi.x, ref.p0.y)
    return LineSegment(a_pt, b_pt, a.solid)


def merge_collinear(segments: Sequence[LineSegment], params: LineParams | None = None) -> list[LineSegment]:
    """Merge same-solidity, nearly collinear segments with small gaps until nothing changes."""
    params = params or LineParams()
    segs = sorted(segments, key=lambda s: (-s.length, s.as_tuple()))
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(segs):
            j = i + 1
            while j < len(segs):
                if _mergeable(segs[i], segs[j], params):
                    segs[i] = _merge_pair(segs[i], segs[j])
                    del segs[j]
                    changed = True
                else:
                    j += 1
            i += 1
    return sorted(segs, key=lambda s: (-s.length, s.as_tuple()))
