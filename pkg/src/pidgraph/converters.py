"""Import foreign annotation sets (symbol boxes plus line-segment endpoints) as DiagramGraph."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .graph import BBox, DiagramGraph, EdgeClass, EdgeRecord, NodeKind, NodeRecord, SymbolClass, cleanup_graph
from .modular.graphgen import GraphGenParams, _Edge, _link_anchors, _nearest_symbol, _simplify, _unit


class UnmappedClassError(KeyError):
    def __str__(self) -> str:
        return f"source class {self.args[0]!r} has no entry in the class mapping"


@dataclass(frozen=True)
class SourceSymbol:
    box: BBox
    label: str
    confidence: float = 1.0


@dataclass(frozen=True)
class SourceAnnotations:
    symbols: tuple[SourceSymbol, ...]
    segments: tuple[tuple[float, float, float, float], ...]
    width: float = 0.0
    height: float = 0.0


def load_class_mapping(path: str | Path) -> dict[str, SymbolClass]:
    """JSON object: source label -> one of the seven symbol class names."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("class mapping must be a JSON object")
    out = {}
    for src, dst in raw.items():
        try:
            out[str(src)] = SymbolClass(dst)
        except ValueError:
            raise ValueError(f"mapping for {src!r} names unknown class {dst!r}") from None
    return out


def _parse_json(data: dict) -> SourceAnnotations:
    symbols = []
    for s in data.get("symbols", []):
        x0, y0, x1, y1 = map(float, s["box"])
        symbols.append(SourceSymbol(BBox(x0, y0, x1, y1), str(s["class"]), float(s.get("confidence", 1.0))))
    segments = []
    for q in data.get("segments", []):
        if len(q) != 4:
            raise ValueError(f"segment needs 4 numbers, got {q!r}")
        segments.append(tuple(float(v) for v in q))
    return SourceAnnotations(tuple(symbols), tuple(segments), float(data.get("width", 0)), float(data.get("height", 0)))


def _parse_csv(text: str) -> SourceAnnotations:
    # rows: kind,label,x0,y0,x1,y1 with kind in {symbol, line}
    symbols, segments = [], []
    for row in csv.DictReader(text.splitlines()):
        coords = tuple(float(row[k]) for k in ("x0", "y0", "x1", "y1"))
        kind = row["kind"].strip().lower()
        if kind == "symbol":
            symbols.append(SourceSymbol(BBox(*coords), row["label"].strip()))
        elif kind == "line":
            segments.append(coords)
        else:
            raise ValueError(f"unknown row kind {row['kind']!r}")
    return SourceAnnotations(tuple(symbols), tuple(segments))


def load_annotations(path: str | Path) -> SourceAnnotations:
    """Read a ``.json`` or ``.csv`` annotation file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return _parse_csv(text)
    return _parse_json(json.loads(text))


def convert_dpid(
    symbols: Sequence[SourceSymbol],
    segments: Sequence[tuple[float, float, float, float]],
    mapping: Mapping[str, SymbolClass],
    params: GraphGenParams | None = None,
    width: float = 0.0,
    height: float = 0.0,
) -> DiagramGraph:
    """Map symbol labels and chain touching segments into edges.

    Segment ends within ``junction_radius`` of each other are joined; ends near
    a symbol snap to it. Straight-through and bend joints of two pieces are
    chained away, three or more pieces leave a crossing. Every edge is Solid,
    since the source format has no line-type labels.
    """
    params = params or GraphGenParams()
    nodes = []
    for k, s in enumerate(symbols):
        if s.label not in mapping:
            raise UnmappedClassError(s.label)
        nodes.append(NodeRecord(k, NodeKind.from_symbol(mapping[s.label]), s.box, s.confidence))
    boxes = [s.box for s in symbols]
    n_sym = len(nodes)

    segs = [q for q in segments if math.hypot(q[2] - q[0], q[3] - q[1]) > 0]
    free: list[tuple[float, float]] = []
    ends: list[list[tuple[str, int]]] = []
    for x0, y0, x1, y1 in segs:
        refs = []
        for x, y in ((x0, y0), (x1, y1)):
            sym = _nearest_symbol(x, y, boxes, params.snap_radius)
            if sym is not None:
                refs.append(("S", sym))
            else:
                free.append((x, y))
                refs.append(("A", len(free) - 1))
        ends.append(refs)

    pts = np.array(free, dtype=np.float64).reshape(-1, 2)
    labels = _link_anchors(pts, np.full(len(pts), -1), params.junction_radius, 0.0)
    n_junc = int(labels.max()) + 1 if len(labels) else 0

    def node_of(ref: tuple[str, int]) -> int:
        return ref[1] if ref[0] == "S" else n_sym + int(labels[ref[1]])

    edges = []
    for (x0, y0, x1, y1), (ra, rb) in zip(segs, ends):
        d = _unit(x1 - x0, y1 - y0)
        edges.append(_Edge(node_of(ra), node_of(rb), True, d, (-d[0], -d[1])))
    # an impossible bend threshold chains every two-piece joint
    edges, _ = _simplify(edges, set(range(n_sym, n_sym + n_junc)), ankle_angle_min=math.inf)

    degree: dict[int, int] = {}
    for e in edges:
        degree[e.u] = degree.get(e.u, 0) + 1
        degree[e.v] = degree.get(e.v, 0) + 1
    half = params.structural_box_size / 2.0
    for k in range(n_junc):
        nid = n_sym + k
        if degree.get(nid, 0) >= 3:
            x, y = pts[labels == k].mean(axis=0)
            nodes.append(NodeRecord(nid, NodeKind.CROSSING, BBox(x - half, y - half, x + half, y + half), 1.0))
    keep = {n.id for n in nodes}
    out_edges = [EdgeRecord(e.u, e.v, EdgeClass.SOLID, 1.0) for e in edges if e.u in keep and e.v in keep]

    if width <= 0 or height <= 0:
        xs = [b.x_max for b in boxes] + [max(q[0], q[2]) for q in segs]
        ys = [b.y_max for b in boxes] + [max(q[1], q[3]) for q in segs]
        width = width if width > 0 else float(max(xs, default=0.0))
        height = height if height > 0 else float(max(ys, default=0.0))
    return cleanup_graph(DiagramGraph(tuple(nodes), tuple(out_edges), float(width), float(height)))


def convert_file(annotations: str | Path, mapping: str | Path, params: GraphGenParams | None = None) -> DiagramGraph:
    ann = load_annotations(annotations)
    return convert_dpid(ann.symbols, ann.segments, load_class_mapping(mapping), params, ann.width, ann.height)
