"""Geometric and photometric augmentations applied jointly to a raster and its graph."""

from __future__ import annotations

from dataclasses import dataclass, replace

import cv2
import numpy as np

from ..graph import BBox, DiagramGraph

Range = tuple[float, float]


def _check_range(name: str, r: Range | None) -> None:
    if r is not None and (len(r) != 2 or r[0] > r[1]):
        raise ValueError(f"{name}: expected (low, high) with low <= high, got {r}")


@dataclass(frozen=True)
class AugmentSpec:
    """Each field is off when None (ranges) or 0 (probabilities).

    ``rot90`` lists the allowed quarter-turn counts, one is drawn uniformly.
    """

    rotation_deg: Range | None = None
    rot90: tuple[int, ...] = (0,)
    hflip: float = 0.0
    vflip: float = 0.0
    brightness: Range | None = None
    contrast: Range | None = None
    scale: Range | None = None
    blur: Range | None = None

    def __post_init__(self) -> None:
        for name in ("rotation_deg", "brightness", "contrast", "scale", "blur"):
            _check_range(name, getattr(self, name))
        if not self.rot90:
            raise ValueError("rot90 needs at least one choice")
        for p in (self.hflip, self.vflip):
            if not 0.0 <= p <= 1.0:
                raise ValueError("flip probabilities must lie in [0, 1]")
        if self.scale is not None and self.scale[0] <= 0:
            raise ValueError("scale factors must be positive")
        if self.contrast is not None and self.contrast[0] < 0:
            raise ValueError("contrast factors must be >= 0")
        if self.blur is not None and self.blur[0] < 0:
            raise ValueError("blur sigma must be >= 0")


def _map_boxes(g: DiagramGraph, fn, width: float, height: float, clip: bool = False) -> DiagramGraph:
    """Push every box corner through ``fn`` and keep the axis-aligned hull."""
    nodes = []
    for n in g.nodes:
        b = n.box
        xs = np.array([b.x_min, b.x_max, b.x_max, b.x_min], dtype=np.float64)
        ys = np.array([b.y_min, b.y_min, b.y_max, b.y_max], dtype=np.float64)
        tx, ty = fn(xs, ys)
        box = BBox(float(tx.min()), float(ty.min()), float(tx.max()), float(ty.max()))
        if clip:
            box = box.clip(0.0, 0.0, width, height)
        nodes.append(replace(n, box=box))
    return DiagramGraph(tuple(nodes), g.edges, float(width), float(height))


def rotate90(image: np.ndarray, g: DiagramGraph, k: int) -> tuple[np.ndarray, DiagramGraph]:
    """Quarter turns clockwise as displayed (x right, y down)."""
    k %= 4
    out, gg = image, g
    for _ in range(k):
        h, w = out.shape[:2]
        out = np.ascontiguousarray(np.rot90(out, -1))
        gg = _map_boxes(gg, lambda x, y, h=h: (h - y, x), h, w)
    return out, gg


def hflip(image: np.ndarray, g: DiagramGraph) -> tuple[np.ndarray, DiagramGraph]:
    w = g.width
    return np.ascontiguousarray(image[:, ::-1]), _map_boxes(g, lambda x, y: (w - x, y), g.width, g.height)


def vflip(image: np.ndarray, g: DiagramGraph) -> tuple[np.ndarray, DiagramGraph]:
    h = g.height
    return np.ascontiguousarray(image[::-1]), _map_boxes(g, lambda x, y: (x, h - y), g.width, g.height)


def rotate_small(image: np.ndarray, g: DiagramGraph, degrees: float, fill: int = 255) -> tuple[np.ndarray, DiagramGraph]:
    h, w = image.shape[:2]
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), degrees, 1.0)
    out = cv2.warpAffine(image, m, (w, h), flags=cv2.INTER_LINEAR, borderValue=fill)

    def fn(x, y):
        return m[0, 0] * x + m[0, 1] * y + m[0, 2], m[1, 0] * x + m[1, 1] * y + m[1, 2]

    return out, _map_boxes(g, fn, g.width, g.height, clip=True)


def rescale(image: np.ndarray, g: DiagramGraph, factor: float) -> tuple[np.ndarray, DiagramGraph]:
    h, w = image.shape[:2]
    nw, nh = max(1, int(round(w * factor))), max(1, int(round(h * factor)))
    interp = cv2.INTER_AREA if factor < 1 else cv2.INTER_LINEAR
    out = cv2.resize(image, (nw, nh), interpolation=interp)
    sx, sy = nw / w, nh / h
    return out, _map_boxes(g, lambda x, y: (x * sx, y * sy), nw, nh)


def augment(image: np.ndarray, g: DiagramGraph, spec: AugmentSpec, seed: int) -> tuple[np.ndarray, DiagramGraph]:
    """Apply the enabled transforms in a fixed order; photometric ones leave the graph alone."""
    h, w = image.shape[:2]
    if (w, h) != (int(round(g.width)), int(round(g.height))):
        raise ValueError(f"image is {w}x{h} but graph is {g.width}x{g.height}")
    rng = np.random.default_rng(seed)
    # draw everything up front so the random stream does not depend on which branches run
    k = int(spec.rot90[int(rng.integers(len(spec.rot90)))])
    do_h = rng.random() < spec.hflip
    do_v = rng.random() < spec.vflip
    angle = rng.uniform(*spec.rotation_deg) if spec.rotation_deg else 0.0
    factor = rng.uniform(*spec.scale) if spec.scale else 1.0
    delta = rng.uniform(*spec.brightness) if spec.brightness else 0.0
    gain = rng.uniform(*spec.contrast) if spec.contrast else 1.0
    sigma = rng.uniform(*spec.blur) if spec.blur else 0.0

    out, gg = image, g
    if k:
        out, gg = rotate90(out, gg, k)
    if do_h:
        out, gg = hflip(out, gg)
    if do_v:
        out, gg = vflip(out, gg)
    if angle:
        out, gg = rotate_small(out, gg, angle)
    if factor != 1.0:
        out, gg = rescale(out, gg, factor)

    if spec.brightness or spec.contrast:
        f = out.astype(np.float32)
        if spec.contrast:
            mean = float(f.mean())
            f = (f - mean) * gain + mean
        f = f + delta
        out = np.clip(np.rint(f), 0, 255).astype(np.uint8)
    if sigma > 0:
        out = cv2.GaussianBlur(out, (0, 0), sigmaX=sigma)
    if out is image:
        out = image.copy()
    return out, gg
