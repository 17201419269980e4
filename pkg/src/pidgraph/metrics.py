"""Detection AP, gIoU-based Hungarian node matching, edge mAP and confusion matrices."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from . import kernels
from .geometry import boxes_array
from .graph import DiagramGraph, EdgeClass, NodeKind, NodeRecord, SymbolClass

NODE_LABEL = "node"
MISS = "miss"


@dataclass
class PRAccumulator:
    tp: list[tuple[Hashable, float]] = field(default_factory=list)
    fp: list[tuple[Hashable, float]] = field(default_factory=list)
    fn: list[Hashable] = field(default_factory=list)

    def add_tp(self, cls: Hashable, conf: float) -> None:
        self.tp.append((cls, float(conf)))

    def add_fp(self, cls: Hashable, conf: float) -> None:
        self.fp.append((cls, float(conf)))

    def add_fn(self, cls: Hashable) -> None:
        self.fn.append(cls)

    def extend(self, other: "PRAccumulator") -> None:
        self.tp.extend(other.tp)
        self.fp.extend(other.fp)
        self.fn.extend(other.fn)

    def classes(self) -> set:
        return {c for c, _ in self.tp} | {c for c, _ in self.fp} | set(self.fn)


def average_precision(acc: PRAccumulator, cls: Hashable) -> float:
    """Non-interpolated AP: sum over the ranking of (R_n - R_{n-1}) * P_n.

    Ranking is confidence descending; equal confidences put TPs first, then
    keep insertion order. FNs only enlarge the number of positives.
    """
    ranked = [(-c, 0, i) for i, (k, c) in enumerate(acc.tp) if k == cls]
    ranked += [(-c, 1, i) for i, (k, c) in enumerate(acc.fp) if k == cls]
    n_pos = sum(1 for k, _ in acc.tp if k == cls) + sum(1 for k in acc.fn if k == cls)
    if n_pos == 0:
        return 0.0 if ranked else 1.0
    ranked.sort()
    total = 0.0
    tp = 0
    for n, (_, is_fp, _) in enumerate(ranked, start=1):
        if not is_fp:
            tp += 1
            total += tp / n
    # each recall step is 1/n_pos, so the sum factors out
    return min(total / n_pos, 1.0)


def _iou_matrix(a: Sequence[NodeRecord], b: Sequence[NodeRecord]) -> np.ndarray:
    return kernels.pairwise_iou(boxes_array([n.box for n in a]), boxes_array([n.box for n in b]))


def match_detections_greedy(
    gt: Sequence[NodeRecord],
    pred: Sequence[NodeRecord],
    iou_thr: float = 0.5,
    class_aware: bool = True,
    label: Callable[[NodeRecord], Hashable] | None = None,
) -> PRAccumulator:
    """Greedy matching in confidence order; each GT box is used at most once."""
    if label is None:
        label = (lambda n: n.kind) if class_aware else (lambda n: NODE_LABEL)
    acc = PRAccumulator()
    gt = sorted(gt, key=lambda n: n.id)
    order = sorted(range(len(pred)), key=lambda k: (-pred[k].confidence, pred[k].id))
    ious = _iou_matrix(gt, pred)
    gt_labels = [label(g) for g in gt]
    taken = np.zeros(len(gt), dtype=bool)
    for k in order:
        p = pred[k]
        pl = label(p)
        best, best_iou = -1, -1.0
        for i in range(len(gt)):
            if taken[i] or (class_aware and gt_labels[i] != pl):
                continue
            if ious[i, k] >= iou_thr and ious[i, k] > best_iou:
                best, best_iou = i, ious[i, k]
        if best >= 0:
            taken[best] = True
            acc.add_tp(pl, p.confidence)
        else:
            acc.add_fp(pl, p.confidence)
    for i in np.flatnonzero(~taken):
        acc.add_fn(gt_labels[i])
    return acc


def _symbols(g: DiagramGraph) -> list[NodeRecord]:
    return [n for n in g.nodes if n.kind.is_symbol]


def symbol_map(gt: DiagramGraph, pred: DiagramGraph, iou_thr: float = 0.5) -> tuple[float, dict[SymbolClass, float]]:
    """Class-aware AP per symbol class present in GT and their mean; structural nodes ignored."""
    label = lambda n: n.kind.symbol_class  # noqa: E731
    gts, preds = _symbols(gt), _symbols(pred)
    acc = match_detections_greedy(gts, preds, iou_thr, class_aware=True, label=label)
    present = [c for c in SymbolClass if any(label(n) == c for n in gts)]
    if not present:
        return (0.0 if preds else 1.0), {}
    per = {c: average_precision(acc, c) for c in present}
    return float(np.mean(list(per.values()))), per


def node_ap(gt: DiagramGraph, pred: DiagramGraph, iou_thr: float = 0.5) -> float:
    """Single-class AP over symbols, crossings and ankles; Border nodes ignored."""
    keep = lambda g: [n for n in g.nodes if n.kind != NodeKind.BORDER]  # noqa: E731
    acc = match_detections_greedy(keep(gt), keep(pred), iou_thr, class_aware=False)
    return average_precision(acc, NODE_LABEL)


@dataclass(frozen=True)
class MatchResult:
    pairs: list[tuple[int, int]]
    unmatched_gt: list[int]
    unmatched_pred: list[int]
    cost: float = 0.0

    def gt_to_pred(self) -> dict[int, int]:
        return dict(self.pairs)

    def pred_to_gt(self) -> dict[int, int]:
        return {p: g for g, p in self.pairs}


def hungarian_match(
    gt_nodes: Sequence[NodeRecord],
    pred_nodes: Sequence[NodeRecord],
    min_giou: float | None = None,
) -> MatchResult:
    """Minimum total (1 - gIoU) assignment; rectangular inputs padded with max cost + 1.

    Inputs are ordered by id before solving so results do not depend on the
    order nodes are stored in. ``min_giou`` optionally drops weak pairs.
    """
    gt = sorted(gt_nodes, key=lambda n: n.id)
    pr = sorted(pred_nodes, key=lambda n: n.id)
    ng, np_ = len(gt), len(pr)
    if ng == 0 or np_ == 0:
        return MatchResult([], [n.id for n in gt], [n.id for n in pr], 0.0)
    g = kernels.pairwise_giou(boxes_array([n.box for n in gt]), boxes_array([n.box for n in pr]))
    cost = 1.0 - g
    size = max(ng, np_)
    padded = np.full((size, size), float(cost.max()) + 1.0)
    padded[:ng, :np_] = cost
    col = kernels.linear_sum_assignment(padded)
    pairs, total = [], 0.0
    matched_g, matched_p = set(), set()
    for i in range(ng):
        j = int(col[i])
        if j >= np_:
            continue
        if min_giou is not None and g[i, j] < min_giou:
            continue
        pairs.append((gt[i].id, pr[j].id))
        total += cost[i, j]
        matched_g.add(i)
        matched_p.add(j)
    return MatchResult(
        pairs,
        [gt[i].id for i in range(ng) if i not in matched_g],
        [pr[j].id for j in range(np_) if j not in matched_p],
        float(total),
    )


def edge_accumulator(gt: DiagramGraph, pred: DiagramGraph, match: MatchResult) -> PRAccumulator:
    """TP/FP/FN bookkeeping for edges under a fixed node matching."""
    acc = PRAccumulator()
    p2g = match.pred_to_gt()
    g2p = match.gt_to_pred()
    gt_edges = {e.key: e.cls for e in gt.edges}
    pred_edges = {e.key for e in pred.edges}
    for e in sorted(pred.edges, key=lambda e: e.key):
        gu, gv = p2g.get(e.u), p2g.get(e.v)
        ok = False
        if gu is not None and gv is not None:
            ok = gt_edges.get((min(gu, gv), max(gu, gv))) == e.cls
        (acc.add_tp if ok else acc.add_fp)(e.cls, e.confidence)
    for e in sorted(gt.edges, key=lambda e: e.key):
        pu, pv = g2p.get(e.u), g2p.get(e.v)
        if pu is None or pv is None or (min(pu, pv), max(pu, pv)) not in pred_edges:
            acc.add_fn(e.cls)
    return acc


def edge_map(
    gt: DiagramGraph,
    pred: DiagramGraph,
    min_giou: float | None = None,
    match: MatchResult | None = None,
) -> tuple[float, dict[EdgeClass, float]]:
    """Edge mAP over the edge classes present in GT, nodes matched by gIoU Hungarian."""
    present = [c for c in EdgeClass if any(e.cls == c for e in gt.edges)]
    if not present:
        return (0.0 if pred.edges else 1.0), {}
    if match is None:
        match = hungarian_match(gt.nodes, pred.nodes, min_giou)
    acc = edge_accumulator(gt, pred, match)
    per = {c: average_precision(acc, c) for c in present}
    return float(np.mean(list(per.values()))), per


@dataclass(frozen=True)
class ConfusionMatrix:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    counts: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gt\\pred", *self.cols])
        for r, row in zip(self.rows, self.counts):
            w.writerow([r, *(int(v) for v in row)])
        return buf.getvalue()

    def as_dict(self) -> dict[str, Any]:
        return {"rows": list(self.rows), "cols": list(self.cols), "counts": self.counts.astype(int).tolist()}


def confusion_matrix(gt: DiagramGraph, pred: DiagramGraph, iou_thr: float = 0.5) -> ConfusionMatrix:
    """Class-agnostic greedy matching of symbols; unmatched GT go to the ``miss`` column."""
    classes = [c.value for c in SymbolClass]
    idx = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes) + 1), dtype=np.int64)
    gts = sorted(_symbols(gt), key=lambda n: n.id)
    preds = _symbols(pred)
    order = sorted(range(len(preds)), key=lambda k: (-preds[k].confidence, preds[k].id))
    ious = _iou_matrix(gts, preds)
    taken = np.zeros(len(gts), dtype=bool)
    for k in order:
        cand = np.where(~taken & (ious[:, k] >= iou_thr), ious[:, k], -1.0) if len(gts) else np.zeros(0)
        if len(cand) == 0 or cand.max() < 0:
            continue
        i = int(np.argmax(cand))
        taken[i] = True
        counts[idx[gts[i].kind.value], idx[preds[k].kind.value]] += 1
    for i in np.flatnonzero(~taken):
        counts[idx[gts[i].kind.value], -1] += 1
    return ConfusionMatrix(tuple(classes), tuple(classes) + (MISS,), counts)


@dataclass
class EvalReport:
    symbol_map: float
    per_class_ap: dict[str, float]
    node_ap: float
    edge_map: float
    per_edge_class_ap: dict[str, float]
    confusion: ConfusionMatrix
    params: dict[str, Any] = field(default_factory=dict)

    def headline(self) -> str:
        return f"Symbols mAP {self.symbol_map:.4f} / Nodes AP {self.node_ap:.4f} / Edges mAP {self.edge_map:.4f}"

    def as_dict(self) -> dict[str, Any]:
        return {
            "symbol_map": self.symbol_map,
            "per_class_ap": self.per_class_ap,
            "node_ap": self.node_ap,
            "edge_map": self.edge_map,
            "per_edge_class_ap": self.per_edge_class_ap,
            "confusion": self.confusion.as_dict(),
            "params": self.params,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def evaluate(gt: DiagramGraph, pred: DiagramGraph, iou_thr: float = 0.5, min_giou: float | None = None) -> EvalReport:
    smap, per_cls = symbol_map(gt, pred, iou_thr)
    emap, per_edge = edge_map(gt, pred, min_giou)
    return EvalReport(
        symbol_map=smap,
        per_class_ap={c.value: v for c, v in per_cls.items()},
        node_ap=node_ap(gt, pred, iou_thr),
        edge_map=emap,
        per_edge_class_ap={c.value: v for c, v in per_edge.items()},
        confusion=confusion_matrix(gt, pred, iou_thr),
        params={"iou_thr": iou_thr, "min_giou": min_giou},
    )
