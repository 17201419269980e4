"""Split a full diagram and its graph into overlapping patches with Border nodes at cut edges."""

from __future__ import annotations

from dataclasses import dataclass, replace

import cv2
import numpy as np

from .geometry import clip_segment_to_box
from .graph import BBox, DiagramGraph, EdgeRecord, NodeKind, NodeRecord

CANONICAL_SIZE = (4500, 7000)  # width, height for portrait plans
DEFAULT_STRUCTURAL_BOX = 32.0


@dataclass(frozen=True)
class PatchPlan:
    patch_size: tuple[int, int]
    offsets: tuple[tuple[int, int], ...]
    full_size: tuple[int, int]

    def windows(self) -> list[BBox]:
        pw, ph = self.patch_size
        return [BBox(x, y, x + pw, y + ph) for x, y in self.offsets]

    def __len__(self) -> int:
        return len(self.offsets)


@dataclass(frozen=True)
class Patch:
    window: BBox
    image: np.ndarray | None
    local_graph: DiagramGraph


def canonical_size(width: float, height: float) -> tuple[int, int]:
    w, h = CANONICAL_SIZE
    return (w, h) if height >= width else (h, w)


def scale_graph(g: DiagramGraph, sx: float, sy: float, width: float | None = None, height: float | None = None) -> DiagramGraph:
    nodes = [replace(n, box=n.box.scale(sx, sy)) for n in g.nodes]
    return DiagramGraph(
        tuple(nodes),
        g.edges,
        g.width * sx if width is None else width,
        g.height * sy if height is None else height,
    )


def resize_canvas(image: np.ndarray | None, g: DiagramGraph, target: tuple[int, int] | None = None) -> tuple[np.ndarray | None, DiagramGraph]:
    """Resize to 4500x7000 (or 7000x4500 for landscape) and scale every box per axis.

    ``image`` may be None to rescale only the graph, using ``g.width``/``g.height``.
    """
    if image is not None:
        h, w = image.shape[:2]
    else:
        w, h = g.width, g.height
    tw, th = target if target is not None else canonical_size(w, h)
    if (w, h) == (tw, th):
        return image, g
    sx, sy = tw / w, th / h
    out = None
    if image is not None:
        interp = cv2.INTER_AREA if sx * sy < 1 else cv2.INTER_LINEAR
        out = cv2.resize(image, (int(tw), int(th)), interpolation=interp)
    return out, scale_graph(g, sx, sy, float(tw), float(th))


def _axis_offsets(full: int, patch: int) -> list[int]:
    if patch >= full:
        return [0]
    stride = patch // 2
    offsets = []
    o = 0
    while o + patch < full:
        offsets.append(o)
        o += stride
    offsets.append(full - patch)
    return offsets


def plan_patches(full_size: tuple[int, int], patch_size: tuple[int, int]) -> PatchPlan:
    """Row-major windows with stride floor(patch/2); the last window per axis is clamped."""
    fw, fh = (int(v) for v in full_size)
    pw, ph = (int(v) for v in patch_size)
    xs = _axis_offsets(fw, pw)
    ys = _axis_offsets(fh, ph)
    offsets = tuple((x, y) for y in ys for x in xs)
    return PatchPlan((pw, ph), offsets, (fw, fh))


def _center_inside(cx: float, cy: float, win: BBox, full_w: float, full_h: float) -> bool:
    in_x = win.x_min <= cx < win.x_max or (cx == win.x_max and win.x_max >= full_w)
    in_y = win.y_min <= cy < win.y_max or (cy == win.y_max and win.y_max >= full_h)
    return in_x and in_y


def crop_window(image: np.ndarray, window: BBox, fill: int = 255) -> np.ndarray:
    """Crop, padding with ``fill`` where the window leaves the image."""
    x0, y0, x1, y1 = (int(round(v)) for v in window.as_tuple())
    h, w = image.shape[:2]
    out = np.full((y1 - y0, x1 - x0) + image.shape[2:], fill, dtype=image.dtype)
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x1, w), min(y1, h)
    if sx1 > sx0 and sy1 > sy0:
        out[sy0 - y0 : sy1 - y0, sx0 - x0 : sx1 - x0] = image[sy0:sy1, sx0:sx1]
    return out


def extract_patch(
    image: np.ndarray | None,
    g: DiagramGraph,
    window: BBox,
    structural_box_size: float = DEFAULT_STRUCTURAL_BOX,
) -> Patch:
    """Cut one window out of a full plan.

    A node is kept when its box centre lies in the window. An edge that leaves
    the window ends in a Border node placed where the straight centre-to-centre
    line meets the window boundary; an edge passing through the window with
    both ends outside becomes a Border-Border edge.
    """
    wx, wy = window.x_min, window.y_min
    pw, ph = window.width, window.height
    full_w = g.width if g.width > 0 else window.x_max
    full_h = g.height if g.height > 0 else window.y_max

    kept: dict[int, NodeRecord] = {}
    for n in g.nodes:
        cx, cy = n.box.center
        if _center_inside(cx, cy, window, full_w, full_h):
            box = n.box.clip(*window.as_tuple()).translate(-wx, -wy)
            kept[n.id] = replace(n, box=box)

    next_id = max((n.id for n in g.nodes), default=-1) + 1
    borders: list[NodeRecord] = []
    edges: list[EdgeRecord] = []
    half = structural_box_size / 2.0

    def border_at(x: float, y: float, conf: float) -> int:
        nonlocal next_id
        lx, ly = x - wx, y - wy
        box = BBox(lx - half, ly - half, lx + half, ly + half).clip(0, 0, pw, ph)
        borders.append(NodeRecord(next_id, NodeKind.BORDER, box, conf))
        next_id += 1
        return next_id - 1

    for e in g.edges:
        iu, iv = e.u in kept, e.v in kept
        if iu and iv:
            edges.append(e)
            continue
        ax, ay = g.node(e.u).box.center
        bx, by = g.node(e.v).box.center
        if iu or iv:
            # walk from the kept endpoint towards the dropped one
            inside, (x0, y0, x1, y1) = (e.u, (ax, ay, bx, by)) if iu else (e.v, (bx, by, ax, ay))
            span = clip_segment_to_box(x0, y0, x1, y1, window)
            t = span[1] if span is not None else 0.0
            b = border_at(x0 + t * (x1 - x0), y0 + t * (y1 - y0), e.confidence)
            edges.append(EdgeRecord(inside, b, e.cls, e.confidence))
            continue
        span = clip_segment_to_box(ax, ay, bx, by, window)
        if span is None or span[1] - span[0] <= 0:
            continue
        t0, t1 = span
        tm = (t0 + t1) / 2.0
        mx, my = ax + tm * (bx - ax), ay + tm * (by - ay)
        if not (window.x_min < mx < window.x_max and window.y_min < my < window.y_max):
            continue  # runs along the boundary
        b0 = border_at(ax + t0 * (bx - ax), ay + t0 * (by - ay), e.confidence)
        b1 = border_at(ax + t1 * (bx - ax), ay + t1 * (by - ay), e.confidence)
        edges.append(EdgeRecord(b0, b1, e.cls, e.confidence))

    local = DiagramGraph(tuple(kept.values()) + tuple(borders), tuple(edges), float(pw), float(ph))
    crop = crop_window(image, window) if image is not None else None
    return Patch(window, crop, local)


def extract_patches(
    image: np.ndarray | None,
    g: DiagramGraph,
    plan: PatchPlan,
    structural_box_size: float = DEFAULT_STRUCTURAL_BOX,
) -> list[Patch]:
    return [extract_patch(image, g, w, structural_box_size) for w in plan.windows()]
