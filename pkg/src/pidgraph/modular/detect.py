"""Symbol detections: a normalized cross-correlation template matcher and a JSON loader."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import cv2
import numpy as np

from .. import kernels
from ..geometry import boxes_array
from ..graph import BBox, SymbolClass
from ..synthgen.templates import Template


@dataclass(frozen=True)
class Detection:
    box: BBox
    cls: SymbolClass
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if not self.box.is_valid():
            raise ValueError(f"invalid box {self.box}")


DetectionSet = list[Detection]


def nms_detections(dets: Sequence[Detection], iou_thr: float, class_aware: bool = True) -> DetectionSet:
    """Greedy NMS by score (ties: input order); suppress when IoU > iou_thr."""
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    if not order:
        return []
    ious = kernels.pairwise_iou(boxes_array([d.box for d in dets]), boxes_array([d.box for d in dets]))
    kept: list[int] = []
    for i in order:
        if all(ious[i, k] <= iou_thr or (class_aware and dets[k].cls != dets[i].cls) for k in kept):
            kept.append(i)
    return [dets[i] for i in kept]


def _scaled(t: Template, s: float) -> np.ndarray:
    if s == 1.0:
        return t.raster
    w = max(1, int(round(t.width * s)))
    h = max(1, int(round(t.height * s)))
    return cv2.resize(t.raster, (w, h), interpolation=cv2.INTER_AREA if s < 1 else cv2.INTER_LINEAR)


def _gray(image: np.ndarray) -> np.ndarray:
    if image.ndim == 3:
        return cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    return image


@dataclass(frozen=True)
class _Peaks:
    """Correlation peaks of one (template, scale): top-left corners and scores."""

    tmpl_w: int
    tmpl_h: int
    cls: SymbolClass
    xs: np.ndarray
    ys: np.ndarray
    scores: np.ndarray


def _exact_peaks(image: np.ndarray, raster: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    th, tw = raster.shape[:2]
    res = cv2.matchTemplate(image, raster, cv2.TM_CCOEFF_NORMED)
    np.nan_to_num(res, copy=False, nan=0.0, posinf=0.0, neginf=0.0)
    cand = res >= threshold
    if not cand.any():
        return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
    # local maxima over a neighbourhood about half the template size
    k = np.ones((max(3, th // 2) | 1, max(3, tw // 2) | 1), np.uint8)
    ys, xs = np.nonzero(cand & (res >= cv2.dilate(res, k)))
    return xs, ys, res[ys, xs].astype(np.float64)


def _pyramid_peaks(image, raster, threshold, margin=0.25, radius=3):
    """Search at half resolution, then score each candidate exactly at full resolution."""
    small = cv2.resize(image, (image.shape[1] // 2, image.shape[0] // 2), interpolation=cv2.INTER_AREA)
    tsmall = cv2.resize(raster, (raster.shape[1] // 2, raster.shape[0] // 2), interpolation=cv2.INTER_AREA)
    if float(tsmall.std()) == 0.0:
        return _exact_peaks(image, raster, threshold)
    cx, cy, _ = _exact_peaks(small, tsmall, threshold - margin)
    th, tw = raster.shape[:2]
    h, w = image.shape[:2]
    xs, ys, sc = [], [], []
    seen = set()
    for x2, y2 in zip((2 * cx).tolist(), (2 * cy).tolist()):
        x0, y0 = max(x2 - radius, 0), max(y2 - radius, 0)
        x1, y1 = min(x2 + radius + 1, w - tw + 1), min(y2 + radius + 1, h - th + 1)
        if x1 <= x0 or y1 <= y0:
            continue
        res = cv2.matchTemplate(image[y0 : y1 + th - 1, x0 : x1 + tw - 1], raster, cv2.TM_CCOEFF_NORMED)
        np.nan_to_num(res, copy=False, nan=0.0, posinf=0.0, neginf=0.0)
        ry, rx = np.unravel_index(int(np.argmax(res)), res.shape)
        key = (x0 + int(rx), y0 + int(ry))
        if res[ry, rx] >= threshold and key not in seen:
            seen.add(key)
            xs.append(key[0])
            ys.append(key[1])
            sc.append(float(res[ry, rx]))
    return np.asarray(xs, int), np.asarray(ys, int), np.asarray(sc, np.float64)


def _find_peaks(image: np.ndarray, raster: np.ndarray, cls: SymbolClass, threshold: float, pyramid: bool) -> _Peaks | None:
    th, tw = raster.shape[:2]
    if th > image.shape[0] or tw > image.shape[1]:
        return None
    if float(raster.std()) == 0.0:
        return None  # flat template correlates with nothing
    if pyramid and min(th, tw) >= 24:
        xs, ys, scores = _pyramid_peaks(image, raster, threshold)
    else:
        xs, ys, scores = _exact_peaks(image, raster, threshold)
    return _Peaks(tw, th, cls, xs, ys, np.clip(scores, 0.0, 1.0))


def _peaks_to_detections(peaks: list[_Peaks], window: BBox | None = None) -> DetectionSet:
    dets = []
    for p in peaks:
        xs, ys, sc = p.xs, p.ys, p.scores
        if window is not None:
            inside = (
                (xs >= window.x_min) & (ys >= window.y_min)
                & (xs + p.tmpl_w <= window.x_max) & (ys + p.tmpl_h <= window.y_max)
            )
            xs, ys, sc = xs[inside], ys[inside], sc[inside]
            xs = xs - window.x_min
            ys = ys - window.y_min
        for x, y, s in zip(xs.tolist(), ys.tolist(), sc.tolist()):
            dets.append(Detection(BBox(float(x), float(y), float(x + p.tmpl_w), float(y + p.tmpl_h)), p.cls, s))
    return dets


def _all_peaks(image, templates, threshold, scales, pyramid) -> list[_Peaks]:
    if not templates:
        raise ValueError("empty template library")
    img = _gray(image)
    out = []
    for t in templates:
        for s in scales:
            p = _find_peaks(img, _scaled(t, s), t.cls, threshold, pyramid)
            if p is not None:
                out.append(p)
    return out


def detect_symbols_template(
    image: np.ndarray,
    templates: Sequence[Template],
    threshold: float = 0.8,
    scales: Sequence[float] = (1.0,),
    nms_iou: float = 0.5,
    pyramid: bool = True,
) -> DetectionSet:
    """Correlation peaks >= threshold at every scale, then class-aware NMS.

    With ``pyramid`` the search runs at half resolution first and every
    candidate is re-scored exactly at full resolution; scores are always the
    full-resolution normalized cross-correlation.
    """
    dets = _peaks_to_detections(_all_peaks(image, templates, threshold, scales, pyramid))
    return nms_detections(dets, nms_iou)


def detect_symbols_windows(
    image: np.ndarray,
    templates: Sequence[Template],
    windows: Sequence[BBox],
    threshold: float = 0.8,
    scales: Sequence[float] = (1.0,),
    nms_iou: float = 0.5,
    pyramid: bool = True,
) -> list[DetectionSet]:
    """Per-window detections in window-local coordinates.

    The correlation map is computed once for the whole image; a window keeps the
    placements that lie entirely inside it, which are the same responses a
    matcher run on the cropped window would produce.
    """
    peaks = _all_peaks(image, templates, threshold, scales, pyramid)
    return [nms_detections(_peaks_to_detections(peaks, w), nms_iou) for w in windows]


_REQUIRED = ("x_min", "y_min", "x_max", "y_max", "class", "confidence")


def load_detections(data: bytes | str) -> DetectionSet:
    """Parse a JSON array of {x_min, y_min, x_max, y_max, class, confidence}."""
    try:
        records = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed detections JSON: {exc}") from exc
    if not isinstance(records, list):
        raise ValueError("detections JSON must be an array")
    out = []
    for k, r in enumerate(records):
        if not isinstance(r, dict) or any(f not in r for f in _REQUIRED):
            raise ValueError(f"record {k}: expected fields {', '.join(_REQUIRED)}")
        try:
            cls = SymbolClass(r["class"])
        except ValueError:
            raise ValueError(f"record {k}: unknown class {r['class']!r}") from None
        box = BBox(float(r["x_min"]), float(r["y_min"]), float(r["x_max"]), float(r["y_max"]))
        out.append(Detection(box, cls, float(r["confidence"])))
    return out


def dump_detections(dets: Sequence[Detection]) -> str:
    return json.dumps(
        [
            {"x_min": d.box.x_min, "y_min": d.box.y_min, "x_max": d.box.x_max, "y_max": d.box.y_max,
             "class": d.cls.value, "confidence": d.confidence}
            for d in dets
        ],
        indent=2,
    )


def load_text_boxes(data: bytes | str) -> list[BBox]:
    """Text regions in the same JSON box format; class and confidence are optional."""
    try:
        records = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed text-box JSON: {exc}") from exc
    boxes = []
    for k, r in enumerate(records):
        try:
            b = BBox(float(r["x_min"]), float(r["y_min"]), float(r["x_max"]), float(r["y_max"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"text box {k}: {exc}") from exc
        if not b.is_valid():
            raise ValueError(f"text box {k}: invalid box")
        boxes.append(b)
    return boxes
