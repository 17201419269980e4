"""End-to-end modular digitization of one plan image."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..geometry import LineSegment
from ..graph import BBox, DiagramGraph, NodeKind, NodeRecord
from ..patcher import canonical_size, plan_patches, resize_canvas, scale_graph
from ..stitcher import StitchParams, stitch
from ..synthgen.templates import Template
from .detect import Detection, detect_symbols_windows
from .graphgen import GraphGenParams, build_graph
from .lines import (
    LineParams,
    binarize,
    cluster_dashes,
    detect_diagonal_lines,
    detect_hv_lines,
    mask_regions,
    merge_collinear,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineParams:
    patch_size: tuple[int, int] | None = (1500, 1500)
    det_threshold: float = 0.8
    det_scales: tuple[float, ...] = (1.0,)
    det_nms_iou: float = 0.5
    mask_pad: float = 3.0
    line: LineParams = field(default_factory=LineParams)
    graph: GraphGenParams = field(default_factory=GraphGenParams)
    stitch: StitchParams = field(default_factory=StitchParams)


def _to_gray(image: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return image
    import cv2

    return cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)


def _detections_graph(dets: Sequence[Detection], w: float, h: float) -> DiagramGraph:
    nodes = tuple(NodeRecord(k, NodeKind.from_symbol(d.cls), d.box, d.confidence) for k, d in enumerate(dets))
    return DiagramGraph(nodes, (), float(w), float(h))


def detect_patched(image: np.ndarray, templates: Sequence[Template], params: PipelineParams) -> list[Detection]:
    """Template detection per patch window, merged with the patch stitching rules."""
    h, w = image.shape[:2]
    if params.patch_size is None:
        windows = [BBox(0.0, 0.0, float(w), float(h))]
    else:
        windows = plan_patches((w, h), params.patch_size).windows()
    per_window = detect_symbols_windows(
        image, templates, windows, params.det_threshold, params.det_scales, params.det_nms_iou
    )
    patches = [(_detections_graph(d, win.width, win.height), win) for d, win in zip(per_window, windows)]
    merged = stitch(patches, params.stitch, full_size=(w, h))
    return [Detection(n.box, n.kind.symbol_class, n.confidence) for n in merged.nodes if n.kind.is_symbol]


def extract_segments(binary: np.ndarray, params: LineParams) -> list[LineSegment]:
    hv = detect_hv_lines(binary, params)
    diag = detect_diagonal_lines(binary, hv, params)
    segs = cluster_dashes(hv + diag, params)
    return merge_collinear(segs, params)


def digitize(
    image: np.ndarray,
    templates: Sequence[Template] | None = None,
    detections: Sequence[Detection] | None = None,
    text_boxes: Sequence[BBox] = (),
    params: PipelineParams | None = None,
) -> DiagramGraph:
    """Image -> graph in the image's own pixel coordinates.

    Symbols come from ``detections`` when given (used as-is), otherwise from the
    template matcher run per patch and merged. Lines are then extracted on the
    whole canvas with symbols and text masked out, and joined into a graph.
    """
    params = params or PipelineParams()
    gray = _to_gray(image)
    h0, w0 = gray.shape[:2]
    target = canonical_size(w0, h0)
    sx, sy = target[0] / w0, target[1] / h0
    canvas, _ = resize_canvas(gray, DiagramGraph((), (), float(w0), float(h0)), target)

    if detections is not None:
        dets = [replace(d, box=d.box.scale(sx, sy)) for d in detections]
    else:
        if not templates:
            raise ValueError("need templates or detections")
        dets = detect_patched(canvas, templates, params)
    log.info("%d symbol detections", len(dets))

    binary = binarize(canvas, params.line.bin_threshold_mode)
    masks = [d.box for d in dets] + [b.scale(sx, sy) for b in text_boxes]
    binary = mask_regions(binary, masks, params.mask_pad)
    segs = extract_segments(binary, params.line)
    log.info("%d line segments", len(segs))

    g = build_graph(dets, segs, params.graph, float(target[0]), float(target[1]))
    if (sx, sy) == (1.0, 1.0):
        return g
    out = scale_graph(g, 1.0 / sx, 1.0 / sy, float(w0), float(h0))
    if detections is not None:
        # hand back the supplied boxes exactly rather than a rescaled round trip
        nodes = [replace(n, box=detections[n.id].box) if n.id < len(detections) else n for n in out.nodes]
        out = out.with_parts(nodes=nodes)
    return out
