"""Graph data model shared by every stage: boxes, node/edge records, GraphML I/O, cleanup."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

from .fileio import atomic_write


class GraphFormatError(ValueError):
    """Raised when a GraphML document cannot be turned into a DiagramGraph."""


class SymbolClass(str, Enum):
    GENERAL = "general"
    TANK_VESSEL = "tank_vessel"
    VALVE = "valve"
    PUMP_COMPRESSOR = "pump_compressor"
    INSTRUMENTATION = "instrumentation"
    ARROW = "arrow"
    INLET_OUTLET = "inlet_outlet"


class NodeKind(str, Enum):
    GENERAL = "general"
    TANK_VESSEL = "tank_vessel"
    VALVE = "valve"
    PUMP_COMPRESSOR = "pump_compressor"
    INSTRUMENTATION = "instrumentation"
    ARROW = "arrow"
    INLET_OUTLET = "inlet_outlet"
    CROSSING = "crossing"
    ANKLE = "ankle"
    BORDER = "border"

    @classmethod
    def from_symbol(cls, sym: SymbolClass) -> "NodeKind":
        return cls(sym.value)

    @property
    def is_structural(self) -> bool:
        return self in _STRUCTURAL

    @property
    def is_symbol(self) -> bool:
        return self not in _STRUCTURAL

    @property
    def symbol_class(self) -> SymbolClass | None:
        return None if self.is_structural else SymbolClass(self.value)


_STRUCTURAL = frozenset({NodeKind.CROSSING, NodeKind.ANKLE, NodeKind.BORDER})


class EdgeClass(str, Enum):
    SOLID = "solid"
    NON_SOLID = "non_solid"


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @classmethod
    def from_center(cls, cx: float, cy: float, size: float) -> "BBox":
        h = size / 2.0
        return cls(cx - h, cy - h, cx + h, cy + h)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return max(0.0, self.width) * max(0.0, self.height)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def is_valid(self) -> bool:
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        return all(math.isfinite(v) for v in vals) and self.x_min <= self.x_max and self.y_min <= self.y_max

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def scale(self, sx: float, sy: float) -> "BBox":
        return BBox(self.x_min * sx, self.y_min * sy, self.x_max * sx, self.y_max * sy)

    def clip(self, x0: float, y0: float, x1: float, y1: float) -> "BBox":
        return BBox(
            min(max(self.x_min, x0), x1),
            min(max(self.y_min, y0), y1),
            min(max(self.x_max, x0), x1),
            min(max(self.y_max, y0), y1),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class NodeRecord:
    id: int
    kind: NodeKind
    box: BBox
    confidence: float = 1.0


@dataclass(frozen=True)
class EdgeRecord:
    """Undirected edge; endpoints are stored as (min id, max id)."""

    u: int
    v: int
    cls: EdgeClass = EdgeClass.SOLID
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.u > self.v:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True, eq=False)
class DiagramGraph:
    nodes: tuple[NodeRecord, ...] = ()
    edges: tuple[EdgeRecord, ...] = ()
    width: float = 0.0
    height: float = 0.0
    _index: dict = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "_index", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> NodeRecord:
        return self._index[node_id]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._index

    @property
    def node_ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def degree(self) -> dict[int, int]:
        deg = {n.id: 0 for n in self.nodes}
        for e in self.edges:
            if e.u == e.v:
                deg[e.u] = deg.get(e.u, 0) + 2
            else:
                deg[e.u] = deg.get(e.u, 0) + 1
                deg[e.v] = deg.get(e.v, 0) + 1
        return deg

    def with_parts(self, nodes: Iterable[NodeRecord] | None = None, edges: Iterable[EdgeRecord] | None = None) -> "DiagramGraph":
        return DiagramGraph(
            tuple(self.nodes if nodes is None else nodes),
            tuple(self.edges if edges is None else edges),
            self.width,
            self.height,
        )

    def sorted(self) -> "DiagramGraph":
        return self.with_parts(sorted(self.nodes, key=lambda n: n.id), sorted(self.edges, key=lambda e: e.key))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiagramGraph):
            return NotImplemented
        a, b = self.sorted(), other.sorted()
        return (
            a.nodes == b.nodes
            and a.edges == b.edges
            and a.width == b.width
            and a.height == b.height
        )

    def __hash__(self) -> int:
        s = self.sorted()
        return hash((s.nodes, s.edges, s.width, s.height))

    def __len__(self) -> int:
        return len(self.nodes)


def collapse_duplicate_edges(edges: Iterable[EdgeRecord]) -> list[EdgeRecord]:
    """Keep one edge per unordered pair: highest confidence, Solid on ties."""
    best: dict[tuple[int, int], EdgeRecord] = {}
    for e in edges:
        cur = best.get(e.key)
        if cur is None or (e.confidence, e.cls is EdgeClass.SOLID) > (cur.confidence, cur.cls is EdgeClass.SOLID):
            best[e.key] = e
    return [best[k] for k in sorted(best)]


def validate(g: DiagramGraph) -> list[str]:
    problems: list[str] = []
    seen: set[int] = set()
    for n in g.nodes:
        if n.id in seen:
            problems.append(f"duplicate node id {n.id}")
        seen.add(n.id)
        if not n.box.is_valid():
            problems.append(f"node {n.id}: invalid box {n.box.as_tuple()}")
        if not (0.0 <= n.confidence <= 1.0):
            problems.append(f"node {n.id}: confidence {n.confidence} outside [0, 1]")
    pairs: set[tuple[int, int]] = set()
    for e in g.edges:
        for end in (e.u, e.v):
            if end not in seen:
                problems.append(f"edge {e.u}-{e.v}: endpoint {end} does not exist")
        if e.key in pairs:
            problems.append(f"edge {e.u}-{e.v}: duplicate edge")
        pairs.add(e.key)
        if not (0.0 <= e.confidence <= 1.0):
            problems.append(f"edge {e.u}-{e.v}: confidence {e.confidence} outside [0, 1]")
    return problems


def cleanup_graph(g: DiagramGraph) -> DiagramGraph:
    """Drop self-loops, then structural nodes left without any edge.

    Isolated symbol nodes are kept: they are still valid detections.
    """
    edges = [e for e in g.edges if e.u != e.v]
    touched = {e.u for e in edges} | {e.v for e in edges}
    nodes = [n for n in g.nodes if n.kind.is_symbol or n.id in touched]
    return g.with_parts(nodes, edges)


def relabel_sequential(g: DiagramGraph) -> DiagramGraph:
    """Renumber node ids to 0..n-1 keeping their current order."""
    mapping = {n.id: i for i, n in enumerate(g.nodes)}
    nodes = [replace(n, id=mapping[n.id]) for n in g.nodes]
    edges = [replace(e, u=mapping[e.u], v=mapping[e.v]) for e in g.edges]
    return g.with_parts(nodes, sorted(edges, key=lambda e: (min(e.u, e.v), max(e.u, e.v))))


# ---------------------------------------------------------------------------
# GraphML
# ---------------------------------------------------------------------------

_NS = "http://graphml.graphdrawing.org/xmlns"
_NODE_KEYS = ("x_min", "y_min", "x_max", "y_max", "class")
_KEYS = (
    ("width", "graph", "double"),
    ("height", "graph", "double"),
    ("x_min", "node", "double"),
    ("y_min", "node", "double"),
    ("x_max", "node", "double"),
    ("y_max", "node", "double"),
    ("class", "node", "string"),
    ("confidence", "node", "double"),
    ("edge_class", "edge", "string"),
    ("edge_confidence", "edge", "double"),
)


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def save_graphml(g: DiagramGraph) -> bytes:
    ET.register_namespace("", _NS)
    root = ET.Element(f"{{{_NS}}}graphml")
    for key_id, domain, typ in _KEYS:
        name = "class" if key_id == "edge_class" else "confidence" if key_id == "edge_confidence" else key_id
        ET.SubElement(
            root,
            f"{{{_NS}}}key",
            {"id": key_id, "for": domain, "attr.name": name, "attr.type": typ},
        )
    graph = ET.SubElement(root, f"{{{_NS}}}graph", {"id": "G", "edgedefault": "undirected"})
    for k, val in (("width", g.width), ("height", g.height)):
        ET.SubElement(graph, f"{{{_NS}}}data", {"key": k}).text = _fmt(val)
    for n in sorted(g.nodes, key=lambda n: n.id):
        el = ET.SubElement(graph, f"{{{_NS}}}node", {"id": str(n.id)})
        for k, val in zip(("x_min", "y_min", "x_max", "y_max"), n.box.as_tuple()):
            ET.SubElement(el, f"{{{_NS}}}data", {"key": k}).text = _fmt(val)
        ET.SubElement(el, f"{{{_NS}}}data", {"key": "class"}).text = n.kind.value
        ET.SubElement(el, f"{{{_NS}}}data", {"key": "confidence"}).text = _fmt(n.confidence)
    for i, e in enumerate(sorted(g.edges, key=lambda e: e.key)):
        el = ET.SubElement(
            graph, f"{{{_NS}}}edge", {"id": f"e{i}", "source": str(e.u), "target": str(e.v)}
        )
        ET.SubElement(el, f"{{{_NS}}}data", {"key": "edge_class"}).text = e.cls.value
        ET.SubElement(el, f"{{{_NS}}}data", {"key": "edge_confidence"}).text = _fmt(e.confidence)
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def load_graphml(data: bytes | str) -> DiagramGraph:
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise GraphFormatError(f"malformed GraphML: {exc}") from exc

    # key id -> (domain, attribute name)
    keys: dict[str, tuple[str, str]] = {}
    for el in root.iter():
        if _local(el.tag) == "key":
            kid = el.get("id")
            if kid is None:
                continue
            keys[kid] = (el.get("for", "all"), el.get("attr.name") or kid)

    graph = next((el for el in root.iter() if _local(el.tag) == "graph"), None)
    if graph is None:
        raise GraphFormatError("no <graph> element")

    def attrs(el: ET.Element, domain: str) -> dict[str, str]:
        out: dict[str, str] = {}
        for d in el:
            if _local(d.tag) != "data":
                continue
            kid = d.get("key", "")
            dom, name = keys.get(kid, (domain, kid))
            if dom not in (domain, "all"):
                continue
            out[name] = (d.text or "").strip()
        return out

    gattrs = attrs(graph, "graph")
    try:
        width = float(gattrs.get("width", 0.0))
        height = float(gattrs.get("height", 0.0))
    except ValueError as exc:
        raise GraphFormatError(f"bad canvas size: {exc}") from exc

    raw_nodes = [el for el in graph if _local(el.tag) == "node"]
    raw_ids = [el.get("id") for el in raw_nodes]
    if any(r is None for r in raw_ids):
        raise GraphFormatError("node without id")
    try:
        id_map = {r: int(r) for r in raw_ids}  # type: ignore[arg-type]
    except ValueError:
        id_map = {r: i for i, r in enumerate(raw_ids)}  # type: ignore[misc]

    nodes: list[NodeRecord] = []
    for el, rid in zip(raw_nodes, raw_ids):
        a = attrs(el, "node")
        missing = [k for k in _NODE_KEYS if k not in a]
        if missing:
            raise GraphFormatError(f"node {rid}: missing key(s) {', '.join(missing)}")
        try:
            kind = NodeKind(a["class"])
        except ValueError:
            raise GraphFormatError(f"node {rid}: unknown class {a['class']!r}") from None
        try:
            box = BBox(*(float(a[k]) for k in ("x_min", "y_min", "x_max", "y_max")))
            conf = float(a.get("confidence", 1.0))
        except ValueError as exc:
            raise GraphFormatError(f"node {rid}: {exc}") from exc
        nodes.append(NodeRecord(id_map[rid], kind, box, conf))  # type: ignore[index]

    edges: list[EdgeRecord] = []
    for el in graph:
        if _local(el.tag) != "edge":
            continue
        src, dst = el.get("source"), el.get("target")
        for end in (src, dst):
            if end not in id_map:
                raise GraphFormatError(f"edge {src}-{dst}: endpoint {end!r} is not a node")
        a = attrs(el, "edge")
        if "class" not in a:
            raise GraphFormatError(f"edge {src}-{dst}: missing key class")
        try:
            cls = EdgeClass(a["class"])
        except ValueError:
            raise GraphFormatError(f"edge {src}-{dst}: unknown class {a['class']!r}") from None
        try:
            conf = float(a.get("confidence", 1.0))
        except ValueError as exc:
            raise GraphFormatError(f"edge {src}-{dst}: {exc}") from exc
        edges.append(EdgeRecord(id_map[src], id_map[dst], cls, conf))  # type: ignore[index]

    if len({n.id for n in nodes}) != len(nodes):
        raise GraphFormatError("duplicate node ids")
    return DiagramGraph(tuple(nodes), tuple(collapse_duplicate_edges(edges)), width, height)


def write_graphml(g: DiagramGraph, path) -> None:
    """Atomic file write: temp file in the same directory, then rename."""
    atomic_write(path, save_graphml(g))


def read_graphml(path) -> DiagramGraph:
    return load_graphml(Path(path).read_bytes())
