"""Turn symbol detections and line segments into a graph with crossings and ankles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.neighbors import NearestNeighbors

from ..geometry import LineSegment, point_box_distance
from ..graph import BBox, DiagramGraph, EdgeClass, EdgeRecord, NodeKind, NodeRecord, cleanup_graph
from .detect import Detection


@dataclass(frozen=True)
class GraphGenParams:
    snap_radius: float = 20.0
    junction_radius: float = 12.0
    end_link_radius: float = 30.0
    ankle_angle_min: float = 20.0
    structural_box_size: float = 32.0

    def __post_init__(self) -> None:
        for name, val in self.__dict__.items():
            if not val > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class _Edge:
    u: int
    v: int
    solid: bool
    du: tuple[float, float]  # direction leaving u along the edge
    dv: tuple[float, float]  # direction leaving v along the edge

    def other(self, n: int) -> int:
        return self.v if n == self.u else self.u

    def dir_at(self, n: int) -> tuple[float, float]:
        return self.du if n == self.u else self.dv


def _nearest_symbol(x: float, y: float, boxes: Sequence[BBox], radius: float) -> int | None:
    best, best_d = None, radius
    for k, b in enumerate(boxes):
        d = point_box_distance(x, y, b)
        if d <= best_d and (best is None or d < best_d):
            best, best_d = k, d
    return best


def _intersections(segs: Sequence[LineSegment]) -> list[tuple[int, int, float, float]]:
    """All (i, j, t_i, t_j) with i < j where the closed segments cross at a single point."""
    if len(segs) < 2:
        return []
    a = np.array([s.as_tuple() for s in segs], dtype=np.float64)
    p, r = a[:, :2], a[:, 2:] - a[:, :2]
    qp = p[None, :, :] - p[:, None, :]  # q_j - p_i
    denom = r[:, None, 0] * r[None, :, 1] - r[:, None, 1] * r[None, :, 0]
    lengths = np.hypot(r[:, 0], r[:, 1])
    scale = lengths[:, None] * lengths[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[..., 0] * r[None, :, 1] - qp[..., 1] * r[None, :, 0]) / denom
        u = (qp[..., 0] * r[:, None, 1] - qp[..., 1] * r[:, None, 0]) / denom
    ok = (np.abs(denom) > 1e-12 * scale) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
    ok = np.triu(ok, 1)
    ii, jj = np.nonzero(ok)
    return [(int(i), int(j), float(t[i, j]), float(u[i, j])) for i, j in zip(ii, jj)]


def _link_anchors(pts: np.ndarray, seg: np.ndarray, radius: float, reach: float) -> np.ndarray:
    """Single-linkage groups of anchor points.

    Points within ``radius`` always join. A free line end also joins the
    nearest free end of another line when that one lies within ``reach``.
    """
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=int)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    nn = NearestNeighbors().fit(pts)
    for i, nbrs in enumerate(nn.radius_neighbors(pts, radius=radius, return_distance=False)):
        for j in nbrs:
            union(i, int(j))
    ends = np.flatnonzero(seg >= 0)
    if len(ends) > 1:
        nn_end = NearestNeighbors().fit(pts[ends])
        dists, idx = nn_end.radius_neighbors(pts[ends], radius=reach, return_distance=True, sort_results=True)
        for a, (ds, js) in enumerate(zip(dists, idx)):
            for d, b in zip(ds, js):
                if seg[ends[b]] != seg[ends[a]]:
                    union(int(ends[a]), int(ends[b]))
                    break
    roots = [find(i) for i in range(n)]
    _, labels = np.unique(roots, return_inverse=True)
    return labels.astype(int)


def _meeting_point(points: np.ndarray, lines: Sequence[LineSegment], reach: float) -> np.ndarray:
    """Point closest to all ``lines`` in the least-squares sense.

    Falls back to the mean of ``points`` when the lines are (nearly) parallel
    or the solution wanders further than ``reach`` from them.
    """
    mean = points.mean(axis=0)
    if len(lines) < 2:
        return mean
    a = np.zeros((2, 2))
    b = np.zeros(2)
    for ln in lines:
        d = np.array(_unit(ln.p1.x - ln.p0.x, ln.p1.y - ln.p0.y))
        proj = np.eye(2) - np.outer(d, d)
        a += proj
        b += proj @ np.array([ln.p0.x, ln.p0.y])
    if np.linalg.eigvalsh(a)[0] < 0.1:
        return mean
    p = np.linalg.solve(a, b)
    return p if np.hypot(*(p - mean)) <= reach else mean


def _unit(dx: float, dy: float) -> tuple[float, float]:
    n = math.hypot(dx, dy)
    return (dx / n, dy / n) if n > 0 else (0.0, 0.0)


def _simplify(edges: list[_Edge], junctions: set[int], ankle_angle_min: float) -> tuple[list[_Edge], set[int]]:
    """Collapse duplicates, drop loops, prune dangling junctions, chain straight degree-2 junctions.

    Returns the edge list and the junctions that stayed as genuine bends.
    """
    while True:
        best: dict[tuple[int, int], _Edge] = {}
        for e in edges:
            if e.u == e.v:
                continue
            key = (min(e.u, e.v), max(e.u, e.v))
            if key not in best:
                best[key] = e
            elif e.solid and not best[key].solid:
                best[key] = e
        edges = [best[k] for k in sorted(best)]

        incident: dict[int, list[_Edge]] = {}
        for e in edges:
            incident.setdefault(e.u, []).append(e)
            incident.setdefault(e.v, []).append(e)

        dangling = {j for j in junctions if len(incident.get(j, [])) <= 1}
        if dangling:
            edges = [e for e in edges if e.u not in dangling and e.v not in dangling]
            junctions = junctions - dangling
            continue

        bends: set[int] = set()
        chained = False
        for j in sorted(junctions):
            inc = incident.get(j, [])
            if len(inc) != 2:
                continue
            e1, e2 = inc
            d1, d2 = e1.dir_at(j), e2.dir_at(j)
            cos = max(-1.0, min(1.0, d1[0] * d2[0] + d1[1] * d2[1]))
            deviation = 180.0 - math.degrees(math.acos(cos))
            if deviation >= ankle_angle_min:
                bends.add(j)
                continue
            a, b = e1.other(j), e2.other(j)
            # common class, Solid when they disagree
            merged = _Edge(a, b, e1.solid or e2.solid, e1.dir_at(a), e2.dir_at(b))
            edges = [e for e in edges if e is not e1 and e is not e2] + [merged]
            junctions = junctions - {j}
            chained = True
            break
        if not chained:
            return edges, bends


def build_graph(
    detections: Sequence[Detection],
    segments: Sequence[LineSegment],
    params: GraphGenParams | None = None,
    width: float = 0.0,
    height: float = 0.0,
) -> DiagramGraph:
    """Symbols from detections; line ends snap to symbols or meet at junctions.

    Junctions joining three or more line pieces become crossings, two pieces
    meeting at an angle become ankles, and straight two-piece junctions are
    chained into one edge.
    """
    params = params or GraphGenParams()
    r = params.junction_radius
    boxes = [d.box for d in detections]
    segs = [s for s in segments if s.length > 0]
    n_sym = len(boxes)

    anchors: list[tuple[float, float]] = []
    anchor_seg: list[int] = []  # owning segment for free line ends, -1 otherwise
    # per segment: (parameter t, ("S", symbol) | ("A", anchor))
    on_seg: list[list[tuple[float, tuple[str, int]]]] = [[] for _ in segs]

    def new_anchor(x: float, y: float, seg: int = -1) -> int:
        anchors.append((x, y))
        anchor_seg.append(seg)
        return len(anchors) - 1

    for i, s in enumerate(segs):
        for t, p in ((0.0, s.p0), (1.0, s.p1)):
            sym = _nearest_symbol(p.x, p.y, boxes, params.snap_radius)
            if sym is not None:
                on_seg[i].append((t, ("S", sym)))
                continue
            a = new_anchor(p.x, p.y, i)
            on_seg[i].append((t, ("A", a)))
            # free end resting on another line's interior: T-junction
            for j, o in enumerate(segs):
                if j == i:
                    continue
                dx, dy = o.p1.x - o.p0.x, o.p1.y - o.p0.y
                ll = dx * dx + dy * dy
                tj = ((p.x - o.p0.x) * dx + (p.y - o.p0.y) * dy) / ll
                along = tj * math.sqrt(ll)
                if along <= r or along >= math.sqrt(ll) - r:
                    continue
                fx, fy = o.p0.x + tj * dx, o.p0.y + tj * dy
                if math.hypot(p.x - fx, p.y - fy) <= r:
                    on_seg[j].append((tj, ("A", a)))

    for i, j, ti, tj in _intersections(segs):
        si, sj = segs[i], segs[j]
        x = si.p0.x + ti * (si.p1.x - si.p0.x)
        y = si.p0.y + ti * (si.p1.y - si.p0.y)
        ends = (si.p0, si.p1, sj.p0, sj.p1)
        if min(math.hypot(x - e.x, y - e.y) for e in ends) <= r:
            continue  # meeting at an end is handled by endpoint clustering
        a = new_anchor(x, y)
        on_seg[i].append((ti, ("A", a)))
        on_seg[j].append((tj, ("A", a)))

    labels = _link_anchors(np.array(anchors).reshape(-1, 2), np.array(anchor_seg, dtype=int), r, params.end_link_radius)
    n_junc = int(labels.max()) + 1 if len(labels) else 0
    lines_at: list[set[int]] = [set() for _ in range(n_junc)]
    for i, refs in enumerate(on_seg):
        for _, (kind, idx) in refs:
            if kind == "A":
                lines_at[int(labels[idx])].add(i)
    centers = np.zeros((n_junc, 2))
    for k in range(n_junc):
        members = np.array(anchors)[labels == k]
        centers[k] = _meeting_point(members, [segs[i] for i in sorted(lines_at[k])], params.end_link_radius)

    def node_of(ref: tuple[str, int]) -> int:
        kind, idx = ref
        return idx if kind == "S" else n_sym + int(labels[idx])

    edges: list[_Edge] = []
    for i, s in enumerate(segs):
        d = _unit(s.p1.x - s.p0.x, s.p1.y - s.p0.y)
        back = (-d[0], -d[1])
        seq = []
        for _, ref in sorted(on_seg[i], key=lambda x: x[0]):
            nid = node_of(ref)
            if not seq or seq[-1] != nid:
                seq.append(nid)
        for u, v in zip(seq, seq[1:]):
            edges.append(_Edge(u, v, s.solid, d, back))

    junctions = set(range(n_sym, n_sym + n_junc))
    edges, bends = _simplify(edges, junctions, params.ankle_angle_min)

    degree: dict[int, int] = {}
    for e in edges:
        degree[e.u] = degree.get(e.u, 0) + 1
        degree[e.v] = degree.get(e.v, 0) + 1

    half = params.structural_box_size / 2.0
    nodes = [NodeRecord(k, NodeKind.from_symbol(d.cls), d.box, d.confidence) for k, d in enumerate(detections)]
    for k in range(n_junc):
        nid = n_sym + k
        deg = degree.get(nid, 0)
        if deg >= 3:
            kind = NodeKind.CROSSING
        elif deg == 2 and nid in bends:
            kind = NodeKind.ANKLE
        else:
            continue
        x, y = centers[k]
        nodes.append(NodeRecord(nid, kind, BBox(x - half, y - half, x + half, y + half), 1.0))
    keep = {n.id for n in nodes}
    out_edges = [
        EdgeRecord(e.u, e.v, EdgeClass.SOLID if e.solid else EdgeClass.NON_SOLID, 1.0)
        for e in edges
        if e.u in keep and e.v in keep
    ]
    if width <= 0 or height <= 0:
        xs = [b.x_max for b in boxes] + [max(s.p0.x, s.p1.x) for s in segs]
        ys = [b.y_max for b in boxes] + [max(s.p0.y, s.p1.y) for s in segs]
        width = width if width > 0 else float(max(xs, default=0.0))
        height = height if height > 0 else float(max(ys, default=0.0))
    return cleanup_graph(DiagramGraph(tuple(nodes), tuple(out_edges), float(width), float(height)))
