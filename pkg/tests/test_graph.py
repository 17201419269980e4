import math

import pytest
from hypothesis import given, settings

from conftest import graphs, node, solid, sym
from pidgraph.graph import (
    BBox,
    DiagramGraph,
    EdgeClass,
    EdgeRecord,
    GraphFormatError,
    NodeKind,
    NodeRecord,
    SymbolClass,
    cleanup_graph,
    load_graphml,
    read_graphml,
    save_graphml,
    validate,
    write_graphml,
)

TWO_NODE_GRAPHML = b"""<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="node" attr.name="x_min" attr.type="double"/>
  <key id="d1" for="node" attr.name="y_min" attr.type="double"/>
  <key id="d2" for="node" attr.name="x_max" attr.type="double"/>
  <key id="d3" for="node" attr.name="y_max" attr.type="double"/>
  <key id="d4" for="node" attr.name="class" attr.type="string"/>
  <key id="d5" for="edge" attr.name="class" attr.type="string"/>
  <key id="d6" for="node" attr.name="label" attr.type="string"/>
  <graph edgedefault="undirected">
    <node id="0"><data key="d0">10</data><data key="d1">10</data><data key="d2">50</data>
      <data key="d3">40</data><data key="d4">valve</data><data key="d6">V-101</data></node>
    <node id="1"><data key="d0">200</data><data key="d1">10</data><data key="d2">260</data>
      <data key="d3">70</data><data key="d4">pump_compressor</data></node>
    <edge source="0" target="1"><data key="d5">solid</data></edge>
  </graph>
</graphml>
"""


def test_symbol_class_is_closed():
    assert len(SymbolClass) == 7
    with pytest.raises(ValueError):
        SymbolClass("flange")


def test_structural_kinds_have_no_symbol_class():
    for k in (NodeKind.CROSSING, NodeKind.ANKLE, NodeKind.BORDER):
        assert k.is_structural and not k.is_symbol and k.symbol_class is None
    assert NodeKind.from_symbol(SymbolClass.VALVE).symbol_class is SymbolClass.VALVE


def test_edge_is_stored_canonically():
    e = EdgeRecord(5, 2, EdgeClass.SOLID)
    assert (e.u, e.v) == (2, 5) and e.key == (2, 5)


def test_load_two_nodes_one_edge():
    g = load_graphml(TWO_NODE_GRAPHML)
    assert len(g.nodes) == 2 and len(g.edges) == 1
    assert g.node(0).kind is NodeKind.VALVE and g.node(1).kind is NodeKind.PUMP_COMPRESSOR
    assert g.node(0).box == BBox(10, 10, 50, 40)
    assert g.node(0).confidence == 1.0
    assert g.edges[0].cls is EdgeClass.SOLID


def test_load_rejects_dangling_edge():
    bad = TWO_NODE_GRAPHML.replace(b'target="1"', b'target="99"')
    with pytest.raises(GraphFormatError, match="99"):
        load_graphml(bad)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda s: s.replace(b"pump_compressor", b"flange"),
        lambda s: s.replace(b'<data key="d3">40</data>', b""),
        lambda s: s.replace(b"</graphml>", b""),
    ],
    ids=["unknown-class", "missing-key", "malformed-xml"],
)
def test_load_errors(mutate):
    with pytest.raises(GraphFormatError):
        load_graphml(mutate(TWO_NODE_GRAPHML))


def test_duplicate_edges_collapse_on_load_to_higher_confidence():
    g = DiagramGraph((sym(0, 0, 0), sym(1, 100, 0)), (solid(0, 1, 0.3),))
    doc = save_graphml(g).decode()
    extra = '<edge source="1" target="0"><data key="edge_class">non_solid</data><data key="edge_confidence">0.8</data></edge>'
    doc = doc.replace("</graph>", extra + "</graph>")
    (e,) = load_graphml(doc).edges
    assert e.cls is EdgeClass.NON_SOLID and e.confidence == 0.8


def test_empty_graph_serializes_without_nodes():
    data = save_graphml(DiagramGraph())
    assert b"<node" not in data
    assert load_graphml(data) == DiagramGraph()


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_graphml_round_trip(g):
    data = save_graphml(g)
    assert load_graphml(data) == g
    assert save_graphml(g) == data


def test_file_round_trip_is_atomic(tmp_path):
    g = DiagramGraph((sym(0, 50, 50), sym(1, 300, 50)), (solid(0, 1),), 400, 200)
    path = tmp_path / "sub" / "g.graphml"
    write_graphml(g, path)
    assert read_graphml(path) == g
    assert [p.name for p in path.parent.iterdir()] == ["g.graphml"]


def test_cleanup_removes_looped_crossing():
    g = DiagramGraph((node(0, NodeKind.CROSSING, 10, 10),), (EdgeRecord(0, 0),))
    out = cleanup_graph(g)
    assert out.nodes == () and out.edges == ()


def test_cleanup_keeps_isolated_symbol():
    g = DiagramGraph((sym(0, 10, 10), node(1, NodeKind.ANKLE, 100, 100)))
    assert [n.id for n in cleanup_graph(g).nodes] == [0]


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_cleanup_idempotent_and_subgraph(g):
    once = cleanup_graph(g)
    assert cleanup_graph(once) == once
    assert set(n.id for n in once.nodes) <= set(n.id for n in g.nodes)
    assert set(e.key for e in once.edges) <= set(e.key for e in g.edges)
    assert all(e.u != e.v for e in once.edges)
    deg = once.degree()
    assert all(deg[n.id] > 0 for n in once.nodes if n.kind.is_structural)


def test_validate():
    ok = DiagramGraph((sym(0, 10, 10), sym(1, 100, 10)), (solid(0, 1),))
    assert validate(ok) == []
    flipped = NodeRecord(3, NodeKind.VALVE, BBox(10, 0, 0, 10))
    problems = validate(DiagramGraph((flipped,)))
    assert len(problems) == 1 and "3" in problems[0]
    dup = DiagramGraph((sym(0, 10, 10), sym(0, 100, 10)))
    assert len(validate(dup)) == 1


def test_validate_rejects_non_finite_box():
    g = DiagramGraph((NodeRecord(0, NodeKind.VALVE, BBox(0, 0, math.inf, 1)),))
    assert validate(g)
