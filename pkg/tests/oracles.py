"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the code under test except the plain data records.
"""

from __future__ import annotations

import itertools

from pidgraph.graph import BBox, DiagramGraph, EdgeClass


def ref_iou(a: BBox, b: BBox) -> float:
    iw = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    ih = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = iw * ih
    union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter
    return inter / union if union > 0 else 0.0


def ref_giou(a: BBox, b: BBox) -> float:
    iw = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    ih = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = iw * ih
    union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter
    hull = (max(a.x_max, b.x_max) - min(a.x_min, b.x_min)) * (max(a.y_max, b.y_max) - min(a.y_min, b.y_min))
    return inter / union - (hull - union) / hull


def ref_min_assignment(cost: list[list[float]]) -> float:
    """Exhaustive minimum over all matchings that saturate the smaller side."""
    n, m = len(cost), len(cost[0]) if cost else 0
    if n == 0 or m == 0:
        return 0.0
    best = float("inf")
    if n <= m:
        for cols in itertools.permutations(range(m), n):
            best = min(best, sum(cost[i][j] for i, j in enumerate(cols)))
    else:
        for rows in itertools.permutations(range(n), m):
            best = min(best, sum(cost[i][j] for j, i in enumerate(rows)))
    return best


def ref_node_matching(gt: DiagramGraph, pred: DiagramGraph) -> dict[int, int]:
    """gt id -> pred id for the exhaustive minimum-(1 - gIoU) matching."""
    g = sorted(gt.nodes, key=lambda n: n.id)
    p = sorted(pred.nodes, key=lambda n: n.id)
    if not g or not p:
        return {}
    cost = [[1.0 - ref_giou(a.box, b.box) for b in p] for a in g]
    best, best_pairs = float("inf"), None
    if len(g) <= len(p):
        for cols in itertools.permutations(range(len(p)), len(g)):
            c = sum(cost[i][j] for i, j in enumerate(cols))
            if c < best:
                best, best_pairs = c, [(g[i].id, p[j].id) for i, j in enumerate(cols)]
    else:
        for rows in itertools.permutations(range(len(g)), len(p)):
            c = sum(cost[i][j] for j, i in enumerate(rows))
            if c < best:
                best, best_pairs = c, [(g[i].id, p[j].id) for j, i in enumerate(rows)]
    return dict(best_pairs)


def ref_ap_threshold_sweep(tp_conf: list[float], fp_conf: list[float], n_pos: int) -> float:
    """Area under the precision-recall step curve, one operating point per distinct threshold."""
    if n_pos == 0:
        return 0.0 if (tp_conf or fp_conf) else 1.0
    thresholds = sorted(set(tp_conf) | set(fp_conf), reverse=True)
    ap, prev_recall = 0.0, 0.0
    for t in thresholds:
        tp = sum(1 for c in tp_conf if c >= t)
        fp = sum(1 for c in fp_conf if c >= t)
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def ref_edge_map(gt: DiagramGraph, pred: DiagramGraph) -> float:
    present = [c for c in EdgeClass if any(e.cls == c for e in gt.edges)]
    if not present:
        return 0.0 if pred.edges else 1.0
    g2p = ref_node_matching(gt, pred)
    p2g = {v: k for k, v in g2p.items()}
    gt_cls = {frozenset((e.u, e.v)): e.cls for e in gt.edges}
    pred_pairs = {frozenset((e.u, e.v)) for e in pred.edges}
    aps = []
    for cls in present:
        tp, fp = [], []
        for e in pred.edges:
            if e.cls != cls:
                continue
            mapped = frozenset((p2g.get(e.u), p2g.get(e.v)))
            hit = None not in mapped and gt_cls.get(mapped) == cls
            (tp if hit else fp).append(e.confidence)
        fn = 0
        for e in gt.edges:
            if e.cls != cls:
                continue
            mapped = frozenset((g2p.get(e.u), g2p.get(e.v)))
            if None in mapped or mapped not in pred_pairs:
                fn += 1
        aps.append(ref_ap_threshold_sweep(tp, fp, len(tp) + fn))
    return sum(aps) / len(aps)
