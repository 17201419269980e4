import json

import pytest

from pidgraph.config import PidConfig, load_config, to_dict


def test_defaults():
    cfg = load_config()
    assert cfg == PidConfig()
    assert cfg.patch_size == (1500, 1500)
    assert cfg.pipeline.stitch.nms_iou == 0.85 and cfg.pipeline.stitch.wbf_iou == 0.55


def test_partial_file_and_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"pipeline": {"patch_size": [2000, 2000], "line": {"dbscan_eps": 25}}, "iou_thr": 0.6}))
    cfg = load_config(p, {"pipeline": {"graph": {"snap_radius": 15}}})
    assert cfg.patch_size == (2000, 2000)
    assert cfg.pipeline.line.dbscan_eps == 25 and cfg.pipeline.line.dash_max_len == 18
    assert cfg.pipeline.graph.snap_radius == 15
    assert cfg.iou_thr == 0.6


def test_round_trip_through_dict(tmp_path):
    cfg = load_config(overrides={"synth": {"n_symbols": 12}})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(to_dict(cfg)))
    assert load_config(p) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="nms"):
        load_config(overrides={"pipeline": {"stitch": {"nms": 0.5}}})


def test_invalid_value_rejected():
    with pytest.raises(ValueError):
        load_config(overrides={"pipeline": {"stitch": {"wbf_iou": 0.9, "nms_iou": 0.5}}})
