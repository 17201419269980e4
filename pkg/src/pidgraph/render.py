"""Overlay a DiagramGraph on its image: class-coloured boxes, edge lines, a legend."""

from __future__ import annotations

import math

import cv2
import numpy as np

from .graph import DiagramGraph, EdgeClass, NodeKind

# BGR
NODE_COLORS: dict[NodeKind, tuple[int, int, int]] = {
    NodeKind.GENERAL: (180, 119, 31),
    NodeKind.TANK_VESSEL: (14, 127, 255),
    NodeKind.VALVE: (44, 160, 44),
    NodeKind.PUMP_COMPRESSOR: (40, 39, 214),
    NodeKind.INSTRUMENTATION: (189, 103, 148),
    NodeKind.ARROW: (75, 86, 140),
    NodeKind.INLET_OUTLET: (194, 119, 227),
    NodeKind.CROSSING: (34, 189, 188),
    NodeKind.ANKLE: (207, 190, 23),
    NodeKind.BORDER: (127, 127, 127),
}
EDGE_COLORS: dict[EdgeClass, tuple[int, int, int]] = {
    EdgeClass.SOLID: (0, 0, 230),
    EdgeClass.NON_SOLID: (230, 0, 160),
}


def _dashed(img: np.ndarray, a: tuple[int, int], b: tuple[int, int], color, thickness: int, dash: int) -> None:
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    if length == 0:
        return
    n = max(1, int(length // (2 * dash)))
    for k in range(n + 1):
        t0 = min(1.0, 2 * k * dash / length)
        t1 = min(1.0, (2 * k + 1) * dash / length)
        if t0 >= 1.0:
            break
        p = (round(a[0] + t0 * (b[0] - a[0])), round(a[1] + t0 * (b[1] - a[1])))
        q = (round(a[0] + t1 * (b[0] - a[0])), round(a[1] + t1 * (b[1] - a[1])))
        cv2.line(img, p, q, color, thickness, cv2.LINE_8)


def _legend(img: np.ndarray, entries: list[tuple[str, tuple[int, int, int]]], scale: float) -> None:
    font = cv2.FONT_HERSHEY_SIMPLEX
    fs = 0.5 * scale
    th = max(1, round(scale))
    row = max(12, round(22 * scale))
    pad = max(4, round(8 * scale))
    width = max(cv2.getTextSize(t, font, fs, th)[0][0] for t, _ in entries) + row + 3 * pad
    height = row * len(entries) + 2 * pad
    h, w = img.shape[:2]
    x1, y1 = min(width, w), min(height, h)
    img[:y1, :x1] = 255
    cv2.rectangle(img, (0, 0), (x1 - 1, y1 - 1), (0, 0, 0), th)
    for k, (text, color) in enumerate(entries):
        y = pad + k * row
        cv2.rectangle(img, (pad, y + 2), (pad + row - 4, y + row - 2), color, -1)
        cv2.putText(img, text, (2 * pad + row, y + row - 5), font, fs, (0, 0, 0), th, cv2.LINE_8)


def render_overlay(image: np.ndarray, g: DiagramGraph, thickness: int | None = None, legend: bool = True) -> np.ndarray:
    """Boxes coloured by node kind, edges as lines between node centres, legend top-left.

    Dashed edges are drawn dashed. An empty graph returns an untouched copy.
    Drawing uses no anti-aliasing, so the same inputs give the same pixels.
    """
    if not g.nodes and not g.edges:
        return image.copy()
    out = cv2.cvtColor(image, cv2.COLOR_GRAY2BGR) if image.ndim == 2 else image[..., :3].copy()
    h, w = out.shape[:2]
    scale = max(1.0, max(h, w) / 2000.0)
    t = thickness or max(1, round(2 * scale))

    centers = {n.id: tuple(round(v) for v in n.box.center) for n in g.nodes}
    for e in sorted(g.edges, key=lambda e: e.key):
        a, b = centers[e.u], centers[e.v]
        color = EDGE_COLORS[e.cls]
        if e.cls is EdgeClass.SOLID:
            cv2.line(out, a, b, color, t, cv2.LINE_8)
        else:
            _dashed(out, a, b, color, t, dash=max(4, round(8 * scale)))
    for n in sorted(g.nodes, key=lambda n: n.id):
        b = n.box
        cv2.rectangle(out, (round(b.x_min), round(b.y_min)), (round(b.x_max), round(b.y_max)), NODE_COLORS[n.kind], t)

    if legend:
        kinds = [k for k in NodeKind if any(n.kind is k for n in g.nodes)]
        classes = [c for c in EdgeClass if any(e.cls is c for e in g.edges)]
        entries = [(k.value, NODE_COLORS[k]) for k in kinds] + [(f"edge {c.value}", EDGE_COLORS[c]) for c in classes]
        _legend(out, entries, scale)
    return out
