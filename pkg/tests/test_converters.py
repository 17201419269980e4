import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pidgraph.graph import BBox, EdgeClass, NodeKind, SymbolClass, validate
from pidgraph.converters import SourceSymbol, UnmappedClassError, convert_dpid, convert_file, load_annotations, load_class_mapping

MAPPING = {"gate_valve": SymbolClass.VALVE, "pump": SymbolClass.PUMP_COMPRESSOR, "box": SymbolClass.GENERAL}


def symbol(label, cx, cy, half=20):
    return SourceSymbol(BBox(cx - half, cy - half, cx + half, cy + half), label)


def test_shared_endpoint_chains_into_one_edge():
    syms = [symbol("gate_valve", 100, 100), symbol("pump", 500, 300)]
    g = convert_dpid(syms, [(120, 100, 500, 100), (500, 100, 500, 280)], MAPPING)
    assert [n.kind for n in g.nodes] == [NodeKind.VALVE, NodeKind.PUMP_COMPRESSOR]
    (e,) = g.edges
    assert (e.u, e.v, e.cls) == (0, 1, EdgeClass.SOLID)


def test_no_segments():
    g = convert_dpid([symbol("box", 100, 100)], [], MAPPING)
    assert len(g.nodes) == 1 and g.edges == ()


def test_unmapped_class_named():
    with pytest.raises(UnmappedClassError, match="flange"):
        convert_dpid([symbol("flange", 100, 100)], [], MAPPING)


def test_three_way_joint_is_crossing():
    syms = [symbol("box", 100, 300), symbol("box", 500, 300), symbol("box", 300, 100)]
    segs = [(120, 300, 300, 300), (300, 300, 480, 300), (300, 120, 300, 300)]
    g = convert_dpid(syms, segs, MAPPING)
    (c,) = [n for n in g.nodes if n.kind is NodeKind.CROSSING]
    assert g.degree()[c.id] == 3 and c.box.center == (300, 300)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(*[st.integers(0, 40)] * 4), max_size=12))
def test_output_valid_and_not_more_edges_than_segments(rows):
    syms = [symbol("box", 100, 100), symbol("pump", 600, 600)]
    segs = [tuple(15.0 * v for v in r) for r in rows]
    g = convert_dpid(syms, segs, MAPPING)
    assert validate(g) == []
    assert len(g.edges) <= len(segs)


def test_files_json_and_csv(tmp_path):
    (tmp_path / "map.json").write_text(json.dumps({"gate_valve": "valve", "pump": "pump_compressor"}))
    ann = {
        "width": 800,
        "height": 600,
        "symbols": [{"box": [80, 80, 120, 120], "class": "gate_valve"}, {"box": [480, 280, 520, 320], "class": "pump"}],
        "segments": [[120, 100, 500, 100], [500, 100, 500, 280]],
    }
    (tmp_path / "a.json").write_text(json.dumps(ann))
    (tmp_path / "a.csv").write_text(
        "kind,label,x0,y0,x1,y1\n"
        "symbol,gate_valve,80,80,120,120\n"
        "symbol,pump,480,280,520,320\n"
        "line,,120,100,500,100\n"
        "line,,500,100,500,280\n"
    )
    a = convert_file(tmp_path / "a.json", tmp_path / "map.json")
    b = convert_file(tmp_path / "a.csv", tmp_path / "map.json")
    assert (a.width, a.height) == (800, 600)
    assert [e.key for e in a.edges] == [e.key for e in b.edges] == [(0, 1)]
    assert len(load_annotations(tmp_path / "a.csv").segments) == 2


def test_mapping_rejects_unknown_target(tmp_path):
    (tmp_path / "m.json").write_text('{"x": "flange"}')
    with pytest.raises(ValueError, match="flange"):
        load_class_mapping(tmp_path / "m.json")
