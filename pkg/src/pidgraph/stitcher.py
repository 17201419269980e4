"""Merge per-patch graphs into one plan graph.

Order of operations: confidence decay near patch borders, low-confidence
filtering, translation to plan coordinates, folding of boxes clipped by an
inner window edge, class-aware NMS, weighted box fusion, reconnection of edges
cut at patch borders, and final cleanup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import kernels
from .geometry import boxes_array
from .graph import (
    BBox,
    DiagramGraph,
    EdgeClass,
    EdgeRecord,
    NodeKind,
    NodeRecord,
    cleanup_graph,
    collapse_duplicate_edges,
    relabel_sequential,
)


class StitchError(ValueError):
    pass


@dataclass(frozen=True)
class StitchParams:
    alpha: float = 0.4
    conf_floor: float = 0.5
    nms_iou: float = 0.85
    wbf_iou: float = 0.55
    border_fuse_radius: float = 40.0
    # a box clipped by an inner window edge folds into a larger same-kind box covering this share of it
    truncation_ioa: float = 0.9
    # stubs of one cut edge point in opposite directions; cos of the angle between them must be below this
    splice_max_cos: float = -0.9

    def __post_init__(self) -> None:
        if not (0.0 <= self.wbf_iou <= self.nms_iou <= 1.0):
            raise ValueError("need 0 <= wbf_iou <= nms_iou <= 1")
        if not (0.0 <= self.conf_floor <= 1.0):
            raise ValueError("conf_floor must lie in [0, 1]")


def decay_confidence(c: float, d: float, S: float, alpha: float = 0.4) -> float:
    return c - alpha * math.exp(-3.0 * abs(d * 2.0 / S))


def border_distance(box: BBox, width: float, height: float) -> tuple[float, float]:
    """Smallest box-to-border distance and the patch side it is measured against."""
    cands = (
        (box.x_min, width),
        (width - box.x_max, width),
        (box.y_min, height),
        (height - box.y_max, height),
    )
    d, side = min(cands, key=lambda c: c[0])
    return max(d, 0.0), side


def decay_graph(g: DiagramGraph, alpha: float) -> DiagramGraph:
    nodes = []
    for n in g.nodes:
        d, side = border_distance(n.box, g.width, g.height)
        nodes.append(replace(n, confidence=decay_confidence(n.confidence, d, side, alpha)))
    return g.with_parts(nodes)


def filter_low_confidence(g: DiagramGraph, conf_floor: float) -> DiagramGraph:
    nodes = [n for n in g.nodes if n.confidence >= conf_floor]
    alive = {n.id for n in nodes}
    edges = [e for e in g.edges if e.u in alive and e.v in alive and e.confidence >= conf_floor]
    return g.with_parts(nodes, edges)


def to_global(
    patch_graph: DiagramGraph,
    window: BBox,
    detector_size: tuple[float, float] | None = None,
) -> DiagramGraph:
    """Patch-local boxes to plan coordinates.

    ``detector_size`` is the (width, height) the patch was resized to before
    inference, if any; boxes are scaled back to the window size first.
    """
    sx = sy = 1.0
    if detector_size is not None:
        sx = window.width / detector_size[0]
        sy = window.height / detector_size[1]
    nodes = [
        replace(n, box=n.box.scale(sx, sy).translate(window.x_min, window.y_min))
        for n in patch_graph.nodes
    ]
    return DiagramGraph(tuple(nodes), patch_graph.edges, window.x_max, window.y_max)


def _order(nodes: Sequence[NodeRecord]) -> list[int]:
    return sorted(range(len(nodes)), key=lambda i: (-nodes[i].confidence, nodes[i].id))


def _same_kind_pairs(nodes: Sequence[NodeRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    i, j, v = kernels.overlap_pairs(boxes_array([n.box for n in nodes]))
    if len(i):
        same = np.array([nodes[a].kind is nodes[b].kind for a, b in zip(i, j)], dtype=bool)
        i, j, v = i[same], j[same], v[same]
    return i, j, v


def nms_nodes(nodes: Sequence[NodeRecord], nms_iou: float) -> tuple[list[NodeRecord], dict[int, int]]:
    """Greedy class-aware NMS. Suppressed ids map to the id of their suppressor."""
    nodes = list(nodes)
    i, j, v = _same_kind_pairs(nodes)
    neighbours: dict[int, list[int]] = {}
    for a, b in zip(i[v > nms_iou].tolist(), j[v > nms_iou].tolist()):
        neighbours.setdefault(a, []).append(b)
        neighbours.setdefault(b, []).append(a)
    suppressed_by: dict[int, int] = {}
    kept: set[int] = set()
    for k in _order(nodes):
        if k in suppressed_by:
            continue
        kept.add(k)
        for other in neighbours.get(k, ()):
            if other not in suppressed_by and other not in kept:
                suppressed_by[other] = k
    remap = {n.id: n.id for n in nodes}
    for k, s in suppressed_by.items():
        remap[nodes[k].id] = nodes[s].id
    survivors = [nodes[k] for k in sorted(kept, key=lambda k: nodes[k].id)]
    return survivors, remap


def _cut_by_window(box: BBox, win: BBox, full_w: float, full_h: float, tol: float = 0.5) -> bool:
    """True when the box touches a window side that lies inside the canvas."""
    return (
        (box.x_min <= win.x_min + tol and win.x_min > tol)
        or (box.y_min <= win.y_min + tol and win.y_min > tol)
        or (box.x_max >= win.x_max - tol and win.x_max < full_w - tol)
        or (box.y_max >= win.y_max - tol and win.y_max < full_h - tol)
    )


def absorb_truncated(
    nodes: Sequence[NodeRecord], cut: set[int], min_ioa: float
) -> tuple[list[NodeRecord], dict[int, int]]:
    """Fold window-clipped partial boxes into the complete copy from a neighbouring patch.

    A node in ``cut`` maps to the larger same-kind box that covers at least
    ``min_ioa`` of its area (the best-covering one when several do).
    """
    nodes = list(nodes)
    i, j, _ = _same_kind_pairs(nodes)
    area = [n.box.area for n in nodes]
    best: dict[int, tuple[float, int]] = {}
    for a, b in zip(i.tolist(), j.tolist()):
        for small, big in ((a, b), (b, a)):
            if nodes[small].id not in cut or area[big] <= area[small] or area[small] <= 0:
                continue
            p, q = nodes[small].box, nodes[big].box
            inter = max(0.0, min(p.x_max, q.x_max) - max(p.x_min, q.x_min)) * max(
                0.0, min(p.y_max, q.y_max) - max(p.y_min, q.y_min)
            )
            ioa = inter / area[small]
            if ioa >= min_ioa and (small not in best or ioa > best[small][0]):
                best[small] = (ioa, big)
    parent = {k: v for k, (_, v) in best.items()}

    def root(k: int) -> int:
        while k in parent:  # areas strictly grow along the chain, so this ends
            k = parent[k]
        return k

    remap = {n.id: nodes[root(k)].id for k, n in enumerate(nodes)}
    kept = [n for k, n in enumerate(nodes) if k not in parent]
    return kept, remap


def _components(n: int, pairs: Sequence[tuple[int, int]]) -> list[list[int]]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for x in range(n):
        groups.setdefault(find(x), []).append(x)
    return list(groups.values())


def wbf_nodes(nodes: Sequence[NodeRecord], wbf_iou: float) -> tuple[list[NodeRecord], dict[int, int]]:
    """Fuse transitive same-kind clusters with IoU > wbf_iou.

    The fused box is the confidence-weighted mean of member coordinates and
    its confidence the plain mean; the fused node takes the smallest member id.
    """
    nodes = list(nodes)
    i, j, v = _same_kind_pairs(nodes)
    hit = v > wbf_iou
    groups = _components(len(nodes), list(zip(i[hit].tolist(), j[hit].tolist())))
    fused: list[NodeRecord] = []
    remap: dict[int, int] = {}
    for members in groups:
        ms = [nodes[m] for m in members]
        if len(ms) == 1:
            fused.append(ms[0])
            remap[ms[0].id] = ms[0].id
            continue
        w = np.array([m.confidence for m in ms], dtype=np.float64)
        coords = np.array([m.box.as_tuple() for m in ms], dtype=np.float64)
        if w.sum() <= 0:
            w = np.ones_like(w)
        box = BBox(*(float(c) for c in (w[:, None] * coords).sum(axis=0) / w.sum()))
        rep = min(m.id for m in ms)
        conf = float(np.mean([m.confidence for m in ms]))
        fused.append(NodeRecord(rep, ms[0].kind, box, conf))
        for m in ms:
            remap[m.id] = rep
    fused.sort(key=lambda n: n.id)
    return fused, remap


def _rewire(edges: Sequence[EdgeRecord], remap: dict[int, int]) -> list[EdgeRecord]:
    return [replace(e, u=remap[e.u], v=remap[e.v]) for e in edges]


def fuse_border_nodes(
    g: DiagramGraph,
    border_fuse_radius: float = 40.0,
    splice_max_cos: float = -0.9,
) -> DiagramGraph:
    """Reconnect edges that were cut at patch borders; remove every Border node.

    Border nodes within ``border_fuse_radius`` of each other are unified. At a
    unified node, incident edges are paired when they leave in opposite
    directions (the two halves of one cut line) and each pair is replaced by a
    single edge: common class, or Solid on conflict; minimum confidence. Border
    nodes and edges left unpaired are dropped.
    """
    by_id = {n.id: n for n in g.nodes}
    borders = [n for n in g.nodes if n.kind is NodeKind.BORDER]
    if not borders:
        return g

    centers = np.array([b.box.center for b in borders], dtype=np.float64)
    pairs = []
    r2 = border_fuse_radius**2
    for a in range(len(borders)):
        d2 = ((centers[a + 1 :] - centers[a]) ** 2).sum(axis=1)
        for off in np.nonzero(d2 < r2)[0].tolist():
            pairs.append((a, a + 1 + off))
    groups = _components(len(borders), pairs)
    unify: dict[int, int] = {}
    rep_center: dict[int, tuple[float, float]] = {}
    for members in groups:
        rep = min(borders[m].id for m in members)
        for m in members:
            unify[borders[m].id] = rep
        c = centers[members].mean(axis=0)
        rep_center[rep] = (float(c[0]), float(c[1]))

    def center(nid: int) -> tuple[float, float]:
        return rep_center[nid] if nid in rep_center else by_id[nid].box.center

    # multigraph keyed by edge slot so parallel stubs survive until pairing
    live: dict[int, tuple[int, int, EdgeClass, float]] = {}
    incident: dict[int, set[int]] = {}
    # where each stub actually touched the border, before unification
    stub_end: dict[tuple[int, int], tuple[float, float]] = {}
    for k, e in enumerate(g.edges):
        u, v = unify.get(e.u, e.u), unify.get(e.v, e.v)
        live[k] = (u, v, e.cls, e.confidence)
        for orig, rep in ((e.u, u), (e.v, v)):
            if orig in unify:
                stub_end[(k, rep)] = by_id[orig].box.center
        incident.setdefault(u, set()).add(k)
        incident.setdefault(v, set()).add(k)
    next_slot = len(g.edges)

    def other(k: int, node: int) -> int:
        u, v, _, _ = live[k]
        return v if u == node else u

    for rep in sorted(rep_center):
        slots = sorted(incident.get(rep, ()))
        dirs: dict[int, tuple[float, float] | None] = {}
        cx, cy = rep_center[rep]
        for k in slots:
            ox, oy = center(other(k, rep))
            dx, dy = ox - cx, oy - cy
            norm = math.hypot(dx, dy)
            dirs[k] = (dx / norm, dy / norm) if norm > 1.0 else None
        cands = []
        for ia, a in enumerate(slots):
            for b in slots[ia + 1 :]:
                if other(a, rep) == other(b, rep) or other(a, rep) == rep:
                    continue
                da, db = dirs[a], dirs[b]
                cos = -1.0 if da is None or db is None else da[0] * db[0] + da[1] * db[1]
                if cos < splice_max_cos:
                    # halves of one cut line touch the border at the same spot
                    pa, pb = stub_end.get((a, rep), (cx, cy)), stub_end.get((b, rep), (cx, cy))
                    gap = math.hypot(pa[0] - pb[0], pa[1] - pb[1]) / max(border_fuse_radius, 1e-9)
                    cands.append((cos + gap, a, b))
        cands.sort()
        used: set[int] = set()
        for _, a, b in cands:
            if a in used or b in used:
                continue
            used.update((a, b))
            oa, ob = other(a, rep), other(b, rep)
            ca, cb = live[a][2], live[b][2]
            cls = ca if ca is cb else EdgeClass.SOLID
            conf = min(live[a][3], live[b][3])
            for k in (a, b):
                for end in live[k][:2]:
                    incident[end].discard(k)
                del live[k]
            live[next_slot] = (oa, ob, cls, conf)
            incident.setdefault(oa, set()).add(next_slot)
            incident.setdefault(ob, set()).add(next_slot)
            next_slot += 1
        for k in list(incident.get(rep, ())):
            for end in live[k][:2]:
                incident[end].discard(k)
            del live[k]

    nodes = [n for n in g.nodes if n.kind is not NodeKind.BORDER]
    edges = [EdgeRecord(u, v, cls, conf) for u, v, cls, conf in live.values()]
    return g.with_parts(nodes, collapse_duplicate_edges(edges))


def stitch(
    patches: Sequence[tuple[DiagramGraph, BBox]],
    params: StitchParams | None = None,
    full_size: tuple[float, float] | None = None,
    detector_size: tuple[float, float] | None = None,
) -> DiagramGraph:
    """Merge patch graphs (each paired with its window) into one plan graph."""
    params = params or StitchParams()
    if not patches:
        w, h = full_size or (0.0, 0.0)
        return DiagramGraph((), (), float(w), float(h))

    if full_size is None:
        full_size = (max(w.x_max for _, w in patches), max(w.y_max for _, w in patches))

    nodes: list[NodeRecord] = []
    edges: list[EdgeRecord] = []
    cut: set[int] = set()
    next_id = 0
    for pg, win in patches:
        expect = detector_size or (win.width, win.height)
        if pg.width > 0 and (abs(pg.width - expect[0]) > 1e-6 or abs(pg.height - expect[1]) > 1e-6):
            raise StitchError(
                f"patch graph is {pg.width}x{pg.height} but its window is {win.width}x{win.height}"
            )
        local = pg if pg.width > 0 else DiagramGraph(pg.nodes, pg.edges, expect[0], expect[1])
        local = filter_low_confidence(decay_graph(local, params.alpha), params.conf_floor)
        glob = to_global(local, win, detector_size)
        ids = {n.id: next_id + k for k, n in enumerate(glob.nodes)}
        next_id += len(ids)
        nodes.extend(replace(n, id=ids[n.id]) for n in glob.nodes)
        edges.extend(replace(e, u=ids[e.u], v=ids[e.v]) for e in glob.edges)
        cut.update(
            ids[n.id]
            for n in glob.nodes
            if n.kind is not NodeKind.BORDER and _cut_by_window(n.box, win, full_size[0], full_size[1])
        )

    nodes, remap_cut = absorb_truncated(nodes, cut, params.truncation_ioa)
    edges = _rewire(edges, remap_cut)
    survivors, remap_nms = nms_nodes(nodes, params.nms_iou)
    edges = _rewire(edges, remap_nms)
    fused, remap_wbf = wbf_nodes(survivors, params.wbf_iou)
    edges = _rewire(edges, remap_wbf)

    g = DiagramGraph(tuple(fused), tuple(edges), float(full_size[0]), float(full_size[1]))
    g = fuse_border_nodes(g, params.border_fuse_radius, params.splice_max_cos)
    g = g.with_parts(edges=collapse_duplicate_edges(e for e in g.edges if e.u != e.v))
    # confidences were shifted by the border decay; keep them in [0, 1]
    g = g.with_parts(nodes=[replace(n, confidence=min(max(n.confidence, 0.0), 1.0)) for n in g.nodes])
    return relabel_sequential(cleanup_graph(g))
