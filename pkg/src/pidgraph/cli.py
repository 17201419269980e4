"""Command line front-end: pidgraph {generate,digitize,stitch,evaluate,render,convert-dpid}."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Iterator, Sequence

from .config import PidConfig, load_config, to_dict
from .fileio import atomic_write, read_image, write_json, write_png
from .graph import read_graphml, validate, write_graphml

log = logging.getLogger("pidgraph")


class CliError(Exception):
    """Reported on stderr with exit code 1."""


def _patch_size(text: str) -> tuple[int, int]:
    parts = text.lower().replace("x", ",").split(",")
    try:
        vals = [int(p) for p in parts if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad patch size {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) <= 0:
        raise argparse.ArgumentTypeError(f"bad patch size {text!r}, want W or WxH")
    return vals[0], vals[1]


def _config(args: argparse.Namespace) -> PidConfig:
    cfg = load_config(args.config)
    if getattr(args, "patch_size", None) is not None:
        cfg = replace(cfg, pipeline=replace(cfg.pipeline, patch_size=args.patch_size))
    if getattr(args, "iou_thr", None) is not None:
        cfg = replace(cfg, iou_thr=args.iou_thr)
    return cfg


def _templates(cfg: PidConfig):
    from .synthgen import default_templates, load_template_library

    if cfg.templates_dir is None:
        return default_templates()
    if not Path(cfg.templates_dir).is_dir():
        raise CliError(f"template directory {cfg.templates_dir} does not exist")
    return load_template_library(cfg.templates_dir)


def _make_plan(job: tuple[PidConfig, int]):
    from .synthgen import generate_diagram

    cfg, seed = job
    return generate_diagram(replace(cfg.synth, rng_seed=seed), list(_templates(cfg)))


def _plans(cfg: PidConfig, seeds: Sequence[int], jobs: int) -> Iterator:
    work = [(cfg, s) for s in seeds]
    if jobs <= 1 or len(work) <= 1:
        yield from map(_make_plan, work)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_make_plan, work)


def cmd_generate(args: argparse.Namespace) -> int:
    from .synthgen import emit_dataset

    cfg = _config(args)
    _templates(cfg)  # fail early on a missing library
    base = cfg.synth.rng_seed if args.seed is None else args.seed
    seeds = [base + k for k in range(args.count)]
    out = Path(args.out)
    emit_dataset(_plans(cfg, seeds, args.jobs), out, cfg.set_name, cfg.patch_size, cfg.structural_box)
    manifest = {"set": cfg.set_name, "plans": [{"index": k, "seed": s} for k, s in enumerate(seeds)], "config": to_dict(cfg)}
    write_json(out / "seeds.json", manifest)
    print(json.dumps({"set": cfg.set_name, "seeds": seeds}))
    return 0


def cmd_digitize(args: argparse.Namespace) -> int:
    from .modular import digitize, load_detections, load_text_boxes

    cfg = _config(args)
    image = read_image(args.image, gray=True)
    dets = load_detections(Path(args.detections).read_text()) if args.detections else None
    texts = load_text_boxes(Path(args.textboxes).read_text()) if args.textboxes else ()
    templates = None if dets is not None else _templates(cfg)
    g = digitize(image, templates, dets, texts, cfg.pipeline)
    problems = validate(g)
    if problems:
        raise CliError("pipeline produced an invalid graph: " + "; ".join(problems[:5]))
    write_graphml(g, args.out)
    log.info("wrote %s (%d nodes, %d edges)", args.out, len(g.nodes), len(g.edges))
    return 0


def cmd_stitch(args: argparse.Namespace) -> int:
    from .stitcher import stitch
    from .synthgen import read_patch_dir

    cfg = _config(args)
    patches, full, det = read_patch_dir(args.patch_dir)
    if not patches:
        log.warning("no patch manifest or no patches in %s; writing an empty graph", args.patch_dir)
    g = stitch([(p.local_graph, p.window) for p in patches], cfg.pipeline.stitch, full, det)
    write_graphml(g, args.out)
    log.info("wrote %s (%d nodes, %d edges)", args.out, len(g.nodes), len(g.edges))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    from .metrics import evaluate

    cfg = _config(args)
    gt, pred = read_graphml(args.gt), read_graphml(args.pred)
    report = evaluate(gt, pred, cfg.iou_thr, cfg.min_giou)
    report.params["config"] = to_dict(cfg)
    print(report.headline())
    if args.out:
        out = Path(args.out)
        atomic_write(out, (report.to_json() + "\n").encode())
        atomic_write(out.with_suffix(".confusion.csv"), report.confusion.to_csv().encode())
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    from .render import render_overlay

    image = read_image(args.image)
    g = read_graphml(args.graph)
    write_png(args.out, render_overlay(image, g))
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    from .converters import convert_file

    cfg = _config(args)
    g = convert_file(args.annotations, args.mapping, cfg.pipeline.graph)
    write_graphml(g, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config; absent keys keep their defaults")
    common.add_argument("--jobs", type=int, default=1, help="worker processes across plans")

    p = argparse.ArgumentParser(prog="pidgraph", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="synthetic plans in the Complete/ + Patched/ layout")
    g.add_argument("--out", required=True, help="output root directory")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, help="seed of plan 0; plan k uses seed+k")
    g.add_argument("--patch-size", type=_patch_size)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("digitize", parents=[common], help="image -> GraphML with the modular pipeline")
    d.add_argument("image")
    d.add_argument("--detections", help="JSON symbol boxes used instead of the template matcher")
    d.add_argument("--textboxes", help="JSON text boxes to mask out")
    d.add_argument("--patch-size", type=_patch_size)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_digitize)

    s = sub.add_parser("stitch", parents=[common], help="merge a patch directory into one plan graph")
    s.add_argument("patch_dir")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_stitch)

    e = sub.add_parser("evaluate", parents=[common], help="symbol mAP, node AP and edge mAP of a prediction")
    e.add_argument("gt")
    e.add_argument("pred")
    e.add_argument("--iou-thr", type=float)
    e.add_argument("--out", help="report JSON; the confusion matrix goes next to it as .confusion.csv")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("render", parents=[common], help="overlay a graph on its image")
    r.add_argument("image")
    r.add_argument("graph")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("convert-dpid", parents=[common], help="symbol boxes + line segments -> GraphML")
    c.add_argument("annotations", help=".json or .csv annotation file")
    c.add_argument("mapping", help="JSON object: source class -> symbol class")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_convert)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("PIDGRAPH_LOG", "WARNING").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, OSError, ValueError, KeyError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) or exc.__class__ is not KeyError else f"missing key {exc}"
        print(f"pidgraph {args.command}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
