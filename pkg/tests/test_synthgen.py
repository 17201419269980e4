from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pidgraph.geometry import Point
from pidgraph.graph import BBox, DiagramGraph, EdgeClass, NodeKind, load_graphml, save_graphml
from pidgraph.synthgen import (
    AugmentSpec,
    PlacementError,
    SynthConfig,
    Template,
    augment,
    default_templates,
    emit_dataset,
    generate_diagram,
    load_template_library,
    read_patch_dir,
    save_template_library,
)
from pidgraph.synthgen.augment import hflip, rotate90
from pidgraph.synthgen.templates import INK

SMALL = dict(canvas_width=1800, canvas_height=2400, n_symbols=6, margin=100)


def connected(g: DiagramGraph) -> bool:
    if not g.nodes:
        return True
    adj = {n.id: [] for n in g.nodes}
    for e in g.edges:
        adj[e.u].append(e.v)
        adj[e.v].append(e.u)
    start = g.nodes[0].id
    seen, todo = {start}, deque([start])
    while todo:
        for m in adj[todo.popleft()]:
            if m not in seen:
                seen.add(m)
                todo.append(m)
    return len(seen) == len(g.nodes)


def box_gap(a: BBox, b: BBox) -> float:
    dx = max(b.x_min - a.x_max, a.x_min - b.x_max, 0.0)
    dy = max(b.y_min - a.y_max, a.y_min - b.y_max, 0.0)
    return max(dx, dy)


def test_template_validation():
    with pytest.raises(ValueError):
        Template("empty", np.zeros((0, 0), np.uint8), default_templates()[0].cls, ())
    with pytest.raises(ValueError):
        Template("bad-port", np.zeros((10, 10), np.uint8), default_templates()[0].cls, (Point(11, 5),))


def test_default_library_covers_all_classes(templates):
    from pidgraph.graph import SymbolClass

    assert {t.cls for t in templates} == set(SymbolClass)
    for t in templates:
        assert (t.raster == INK).any()
        assert t.ports


def test_template_library_round_trip(tmp_path, templates):
    save_template_library(templates, tmp_path)
    back = load_template_library(tmp_path)
    assert [t.id for t in back] == [t.id for t in templates]
    for a, b in zip(templates, back):
        assert a.cls is b.cls and a.ports == b.ports
        np.testing.assert_array_equal(a.raster, b.raster)


def test_two_symbols_minimum(templates):
    img, g = generate_diagram(SynthConfig(n_symbols=2, extra_edge_fraction=0.0, rng_seed=1, **{k: v for k, v in SMALL.items() if k != "n_symbols"}), templates)
    assert sum(n.kind.is_symbol for n in g.nodes) == 2
    assert len(g.edges) >= 1
    assert connected(g)
    assert img.shape == (2400, 1800) and img.dtype == np.uint8


def test_same_seed_identical_output(templates):
    cfg = SynthConfig(rng_seed=42, **SMALL)
    a_img, a_g = generate_diagram(cfg, templates)
    b_img, b_g = generate_diagram(cfg, templates)
    assert a_img.tobytes() == b_img.tobytes()
    assert save_graphml(a_g) == save_graphml(b_g)


def test_different_seed_differs(templates):
    a, _ = generate_diagram(SynthConfig(rng_seed=1, **SMALL), templates)
    b, _ = generate_diagram(SynthConfig(rng_seed=2, **SMALL), templates)
    assert a.tobytes() != b.tobytes()


def test_all_dashed(templates):
    _, g = generate_diagram(SynthConfig(dashed_fraction=1.0, rng_seed=3, **SMALL), templates)
    assert g.edges and all(e.cls is EdgeClass.NON_SOLID for e in g.edges)


def test_all_solid(templates):
    _, g = generate_diagram(SynthConfig(dashed_fraction=0.0, rng_seed=3, **SMALL), templates)
    assert all(e.cls is EdgeClass.SOLID for e in g.edges)


def test_placement_failure_on_tiny_canvas(templates):
    cfg = SynthConfig(canvas_width=400, canvas_height=400, n_symbols=12, margin=20, max_attempts=2)
    with pytest.raises(PlacementError):
        generate_diagram(cfg, templates)


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(n_symbols=1)
    with pytest.raises(ValueError):
        SynthConfig(dashed_fraction=1.5)


def test_needs_templates():
    with pytest.raises(ValueError):
        generate_diagram(SynthConfig(**SMALL), [])


def _check_plan(img, g, cfg, templates):
    assert connected(g)
    deg = g.degree()
    for n in g.nodes:
        if n.kind is NodeKind.CROSSING:
            assert deg[n.id] >= 3
        elif n.kind is NodeKind.ANKLE:
            assert deg[n.id] == 2
        assert n.kind is not NodeKind.BORDER
    symbols = [n for n in g.nodes if n.kind.is_symbol]
    for i, a in enumerate(symbols):
        for b in symbols[i + 1 :]:
            assert box_gap(a.box, b.box) >= cfg.min_symbol_gap
    # route ink inside a symbol box only next to one of its ports
    snap = 20
    for n in symbols:
        x0, y0 = int(n.box.x_min), int(n.box.y_min)
        cands = [t for t in templates if t.cls is n.kind.symbol_class and (t.width, t.height) == (n.box.width, n.box.height)]
        assert cands
        region = img[y0 : y0 + cands[0].height, x0 : x0 + cands[0].width] == INK
        own = np.zeros_like(region)
        for t in cands:
            own |= t.raster == INK
        ys, xs = np.nonzero(region & ~own)
        ports = np.array([[p.x, p.y] for t in cands for p in t.ports])
        if len(xs):
            d = np.min(np.hypot(xs[:, None] - ports[None, :, 0], ys[:, None] - ports[None, :, 1]), axis=1)
            assert d.max() <= snap


@pytest.mark.parametrize("seed", range(6))
def test_generated_plan_invariants(seed, templates):
    cfg = SynthConfig(rng_seed=seed, **{**SMALL, "n_symbols": 8})
    img, g = generate_diagram(cfg, templates)
    _check_plan(img, g, cfg, templates)


def test_full_size_plan_invariants(full_plan, templates):
    img, g = full_plan
    assert img.shape == (7000, 4500)
    _check_plan(img, g, SynthConfig(), templates)
    assert any(n.kind is NodeKind.CROSSING for n in g.nodes)
    assert any(n.kind is NodeKind.ANKLE for n in g.nodes)
    assert {e.cls for e in g.edges} == set(EdgeClass)


# augmentation


def test_hflip_twice_is_identity(small_plan):
    img, g = small_plan
    a, ga = hflip(*hflip(img, g))
    np.testing.assert_array_equal(a, img)
    assert ga == g


def test_rot90_box_example():
    img = np.full((100, 100), 255, np.uint8)
    img[0:20, 0:10] = 0  # box (0,0,10,20): 10 wide, 20 tall
    from pidgraph.graph import NodeRecord

    g = DiagramGraph((NodeRecord(0, NodeKind.VALVE, BBox(0, 0, 10, 20)),), (), 100, 100)
    out, gg = rotate90(img, g, 1)
    b = gg.node(0).box
    assert (b.width, b.height) == (20, 10)
    ys, xs = np.nonzero(out == 0)
    assert (xs.min(), ys.min(), xs.max() + 1, ys.max() + 1) == tuple(int(v) for v in b.as_tuple())


def test_rot90_four_times_identity(small_plan):
    img, g = small_plan
    out, gg = rotate90(img, g, 4)
    np.testing.assert_array_equal(out, img)
    assert gg == g


def test_brightness_only_keeps_graph(small_plan):
    img, g = small_plan
    out, gg = augment(img, g, AugmentSpec(brightness=(-40, -20)), seed=0)
    assert gg == g
    assert out.shape == img.shape and not np.array_equal(out, img)


def test_augment_deterministic(small_plan):
    img, g = small_plan
    spec = AugmentSpec(rotation_deg=(-2, 2), rot90=(0, 1, 2, 3), hflip=0.5, vflip=0.5, contrast=(0.8, 1.2), scale=(0.9, 1.1), blur=(0, 1))
    a = augment(img, g, spec, seed=9)
    b = augment(img, g, spec, seed=9)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]
    h, w = a[0].shape
    assert (w, h) == (round(a[1].width), round(a[1].height))
    for n in a[1].nodes:
        assert n.box.is_valid()


def test_augment_size_mismatch(small_plan):
    img, g = small_plan
    with pytest.raises(ValueError):
        augment(img[:-1], g, AugmentSpec(), seed=0)


def test_augment_spec_validation():
    with pytest.raises(ValueError):
        AugmentSpec(scale=(1.2, 0.8))
    with pytest.raises(ValueError):
        AugmentSpec(hflip=2.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 3), st.booleans())
def test_geometric_transforms_move_box_content(k, flip):
    img = np.full((60, 90), 255, np.uint8)
    img[10:25, 30:70] = 0
    from pidgraph.graph import NodeRecord

    g = DiagramGraph((NodeRecord(0, NodeKind.GENERAL, BBox(30, 10, 70, 25)),), (), 90, 60)
    out, gg = rotate90(img, g, k)
    if flip:
        out, gg = hflip(out, gg)
    ys, xs = np.nonzero(out == 0)
    assert (xs.min(), ys.min(), xs.max() + 1, ys.max() + 1) == tuple(int(v) for v in gg.node(0).box.as_tuple())


# dataset layout


def test_emit_one_plan_no_patches(tmp_path, small_plan):
    emit_dataset([small_plan], tmp_path)
    assert sorted(p.name for p in (tmp_path / "Complete" / "train").iterdir()) == ["0.graphml", "0.png"]
    g = load_graphml((tmp_path / "Complete" / "train" / "0.graphml").read_bytes())
    assert g == small_plan[1]


def test_emit_zero_plans(tmp_path):
    emit_dataset([], tmp_path)
    assert (tmp_path / "Complete" / "train").is_dir() and (tmp_path / "Patched" / "train").is_dir()
    assert not any((tmp_path / "Complete" / "train").iterdir())


def test_emit_two_plans_with_patches(tmp_path, small_plan):
    emit_dataset([small_plan, small_plan], tmp_path, patch_size=(1000, 1000))
    names = sorted(p.name for p in (tmp_path / "Complete" / "train").iterdir())
    assert names == ["0.graphml", "0.png", "1.graphml", "1.png"]
    patches, full, _ = read_patch_dir(tmp_path / "Patched" / "train" / "0")
    assert full == (1800, 2400)
    assert len(patches) == 3 * 4
    assert (tmp_path / "Patched" / "train" / "0" / "0.png").exists()
