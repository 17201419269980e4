from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from pidgraph.graph import BBox, DiagramGraph, EdgeClass, EdgeRecord, NodeKind, NodeRecord, SymbolClass

# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def box(cx: float, cy: float, size: float = 40.0) -> BBox:
    return BBox.from_center(cx, cy, size)


def sym(i: int, cx: float, cy: float, cls: SymbolClass = SymbolClass.VALVE, size: float = 40.0, conf: float = 1.0) -> NodeRecord:
    return NodeRecord(i, NodeKind.from_symbol(cls), box(cx, cy, size), conf)


def node(i: int, kind: NodeKind, cx: float, cy: float, size: float = 32.0, conf: float = 1.0) -> NodeRecord:
    return NodeRecord(i, kind, box(cx, cy, size), conf)


def solid(u: int, v: int, conf: float = 1.0) -> EdgeRecord:
    return EdgeRecord(u, v, EdgeClass.SOLID, conf)


def dashed(u: int, v: int, conf: float = 1.0) -> EdgeRecord:
    return EdgeRecord(u, v, EdgeClass.NON_SOLID, conf)


coords = st.floats(min_value=0.0, max_value=2000.0, allow_nan=False, allow_infinity=False)
sizes = st.floats(min_value=1.0, max_value=300.0, allow_nan=False, allow_infinity=False)
unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def boxes(draw) -> BBox:
    x, y, w, h = draw(coords), draw(coords), draw(sizes), draw(sizes)
    return BBox(x, y, x + w, y + h)


@st.composite
def graphs(draw, max_nodes: int = 12, kinds=tuple(NodeKind)) -> DiagramGraph:
    n = draw(st.integers(0, max_nodes))
    ids = draw(st.lists(st.integers(0, 10_000), min_size=n, max_size=n, unique=True))
    nodes = [NodeRecord(i, draw(st.sampled_from(kinds)), draw(boxes()), draw(unit)) for i in ids]
    edges = []
    if n >= 2:
        pairs = draw(
            st.lists(
                st.tuples(st.sampled_from(ids), st.sampled_from(ids)).filter(lambda p: p[0] != p[1]),
                max_size=2 * n,
            )
        )
        seen = set()
        for u, v in pairs:
            key = (min(u, v), max(u, v))
            if key in seen:
                continue
            seen.add(key)
            edges.append(EdgeRecord(u, v, draw(st.sampled_from(list(EdgeClass))), draw(unit)))
    return DiagramGraph(tuple(nodes), tuple(edges), draw(coords), draw(coords))


def random_graph(rng: np.random.Generator, n_nodes: int, p_edge: float = 0.4, extent: float = 300.0) -> DiagramGraph:
    """Random boxes and edges with continuous confidences (ties have probability zero)."""
    kinds = list(NodeKind)[:9]  # no Border at evaluation time
    nodes = []
    for i in range(n_nodes):
        x, y = rng.uniform(0, extent, 2)
        w, h = rng.uniform(10, 80, 2)
        nodes.append(NodeRecord(i, kinds[rng.integers(len(kinds))], BBox(x, y, x + w, y + h), float(rng.uniform(0.01, 1))))
    edges = []
    for u in range(n_nodes):
        for v in range(u + 1, n_nodes):
            if rng.random() < p_edge:
                cls = EdgeClass.SOLID if rng.random() < 0.6 else EdgeClass.NON_SOLID
                edges.append(EdgeRecord(u, v, cls, float(rng.uniform(0.01, 1))))
    return DiagramGraph(tuple(nodes), tuple(edges), extent + 80, extent + 80)


@pytest.fixture(scope="session")
def templates():
    from pidgraph.synthgen import default_templates

    return default_templates()


@pytest.fixture(scope="session")
def small_plan(templates):
    """A small synthetic plan, cheap enough for per-test use."""
    from pidgraph.synthgen import SynthConfig, generate_diagram

    cfg = SynthConfig(canvas_width=1800, canvas_height=2400, n_symbols=6, rng_seed=7, margin=100)
    return generate_diagram(cfg, templates)


@pytest.fixture(scope="session")
def full_plan(templates):
    from pidgraph.synthgen import SynthConfig, generate_diagram

    return generate_diagram(SynthConfig(rng_seed=0), templates)
