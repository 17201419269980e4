import json

import pytest

from pidgraph.cli import build_parser, main
from pidgraph.graph import load_graphml, read_graphml, validate, write_graphml
from pidgraph.modular.detect import Detection, dump_detections

SMALL = {"synth": {"canvas_width": 1800, "canvas_height": 2400, "n_symbols": 6, "margin": 100}}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**SMALL, "pipeline": {"patch_size": [1000, 1000]}}))
    return p


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_generate_one(tmp_path, cfg_path, capsys):
    out = tmp_path / "d"
    assert main(["generate", "--config", str(cfg_path), "--out", str(out), "--count", "1", "--seed", "3"]) == 0
    assert sorted(p.name for p in (out / "Complete" / "train").iterdir()) == ["0.graphml", "0.png"]
    assert json.loads(capsys.readouterr().out)["seeds"] == [3]
    manifest = json.loads((out / "seeds.json").read_text())
    assert manifest["config"]["synth"]["canvas_width"] == 1800


def test_generate_reproducible(tmp_path, cfg_path):
    for name in ("a", "b"):
        main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / name), "--count", "2", "--seed", "5"])
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_generate_parallel_matches_serial(tmp_path, cfg_path):
    main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "s"), "--count", "2", "--seed", "1"])
    main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "p"), "--count", "2", "--seed", "1", "--jobs", "2"])
    assert tree(tmp_path / "s") == tree(tmp_path / "p")


def test_generate_stitch_evaluate_round_trip(tmp_path, cfg_path, capsys):
    out = tmp_path / "d"
    main(["generate", "--config", str(cfg_path), "--out", str(out), "--count", "1", "--seed", "0"])
    pred = tmp_path / "pred.graphml"
    assert main(["stitch", str(out / "Patched" / "train" / "0"), "--config", str(cfg_path), "--out", str(pred)]) == 0
    capsys.readouterr()
    report = tmp_path / "report.json"
    assert main(["evaluate", str(out / "Complete" / "train" / "0.graphml"), str(pred), "--out", str(report)]) == 0
    assert capsys.readouterr().out.strip() == "Symbols mAP 1.0000 / Nodes AP 1.0000 / Edges mAP 1.0000"
    data = json.loads(report.read_text())
    assert data["edge_map"] == 1.0 and "config" in data["params"]
    assert (tmp_path / "report.confusion.csv").exists()


def test_evaluate_without_edges(tmp_path, capsys, small_plan):
    _, g = small_plan
    write_graphml(g, tmp_path / "gt.graphml")
    write_graphml(g.with_parts(edges=[]), tmp_path / "pred.graphml")
    main(["evaluate", str(tmp_path / "gt.graphml"), str(tmp_path / "pred.graphml")])
    assert capsys.readouterr().out.strip().endswith("Edges mAP 0.0000")


def test_stitch_empty_dir_warns(tmp_path, caplog):
    (tmp_path / "empty").mkdir()
    assert main(["stitch", str(tmp_path / "empty"), "--out", str(tmp_path / "g.graphml")]) == 0
    g = read_graphml(tmp_path / "g.graphml")
    assert g.nodes == () and g.edges == ()
    assert any("no patch" in r.message for r in caplog.records)


def test_digitize_with_detections(tmp_path, small_plan):
    from pidgraph.fileio import write_png

    img, gt = small_plan
    write_png(tmp_path / "p.png", img)
    dets = [Detection(n.box, n.kind.symbol_class, 1.0) for n in gt.nodes if n.kind.is_symbol]
    (tmp_path / "d.json").write_text(dump_detections(dets))
    out = tmp_path / "o.graphml"
    assert main(["digitize", str(tmp_path / "p.png"), "--detections", str(tmp_path / "d.json"), "--out", str(out)]) == 0
    g = read_graphml(out)
    assert validate(g) == []
    assert [n.box for n in g.nodes if n.kind.is_symbol] == [d.box for d in dets]


def test_patch_size_flag():
    args = build_parser().parse_args(["digitize", "x.png", "--out", "o", "--patch-size", "2000"])
    assert args.patch_size == (2000, 2000)
    args = build_parser().parse_args(["generate", "--out", "o", "--patch-size", "1200x900"])
    assert args.patch_size == (1200, 900)


def test_render_and_convert(tmp_path, small_plan):
    from pidgraph.fileio import write_png

    img, g = small_plan
    write_png(tmp_path / "p.png", img)
    write_graphml(g, tmp_path / "g.graphml")
    assert main(["render", str(tmp_path / "p.png"), str(tmp_path / "g.graphml"), "--out", str(tmp_path / "r.png")]) == 0
    assert (tmp_path / "r.png").stat().st_size > 0

    (tmp_path / "map.json").write_text('{"v": "valve"}')
    (tmp_path / "a.json").write_text(json.dumps({"symbols": [{"box": [0, 0, 40, 40], "class": "v"}], "segments": []}))
    assert main(["convert-dpid", str(tmp_path / "a.json"), str(tmp_path / "map.json"), "--out", str(tmp_path / "c.graphml")]) == 0
    assert len(read_graphml(tmp_path / "c.graphml").nodes) == 1


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["evaluate", str(tmp_path / "missing.graphml"), str(tmp_path / "missing.graphml")]) == 1
    assert "pidgraph evaluate" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 1}')
    assert main(["generate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    (tmp_path / "map.json").write_text("{}")
    (tmp_path / "a.json").write_text(json.dumps({"symbols": [{"box": [0, 0, 4, 4], "class": "flange"}]}))
    assert main(["convert-dpid", str(tmp_path / "a.json"), str(tmp_path / "map.json"), "--out", str(tmp_path / "c.graphml")]) == 1
    assert "flange" in capsys.readouterr().err
