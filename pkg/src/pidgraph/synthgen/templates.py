"""Symbol templates: raster + class + port anchors, and the built-in library."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from ..fileio import write_json, write_png
from ..geometry import Point
from ..graph import SymbolClass

INK = 0
PAPER = 255
STROKE = 3


@dataclass(frozen=True, eq=False)
class Template:
    id: str
    raster: np.ndarray
    cls: SymbolClass
    ports: tuple[Point, ...]

    def __post_init__(self) -> None:
        if self.raster.size == 0:
            raise ValueError(f"template {self.id}: empty raster")
        h, w = self.raster.shape[:2]
        for p in self.ports:
            if not (0 <= p.x <= w and 0 <= p.y <= h):
                raise ValueError(f"template {self.id}: port {p} outside {w}x{h}")

    @property
    def width(self) -> int:
        return int(self.raster.shape[1])

    @property
    def height(self) -> int:
        return int(self.raster.shape[0])


def side_ports(w: int, h: int, sides: str = "nesw") -> tuple[Point, ...]:
    pts = {
        "n": Point(w / 2.0, 0.0),
        "e": Point(float(w), h / 2.0),
        "s": Point(w / 2.0, float(h)),
        "w": Point(0.0, h / 2.0),
    }
    return tuple(pts[s] for s in sides)


def _canvas(w: int, h: int) -> np.ndarray:
    return np.full((h, w), PAPER, dtype=np.uint8)


def _general() -> Template:
    w = h = 80
    img = _canvas(w, h)
    cv2.rectangle(img, (1, 1), (w - 2, h - 2), INK, STROKE)
    cv2.line(img, (1, 1), (w - 2, h - 2), INK, STROKE)
    cv2.line(img, (w - 2, 1), (1, h - 2), INK, STROKE)
    return Template("general_box", img, SymbolClass.GENERAL, side_ports(w, h))


def _general_exchanger() -> Template:
    w, h = 120, 64
    img = _canvas(w, h)
    cv2.rectangle(img, (1, 1), (w - 2, h - 2), INK, STROKE)
    pts = np.array([[8, h // 2], [30, 8], [52, h - 9], [74, 8], [96, h - 9], [w - 9, h // 2]], np.int32)
    cv2.polylines(img, [pts], False, INK, STROKE)
    return Template("general_exchanger", img, SymbolClass.GENERAL, side_ports(w, h))


def _vessel() -> Template:
    w, h = 110, 180
    img = _canvas(w, h)
    r = w // 2
    cv2.ellipse(img, (r, r), (r - 2, r - 2), 0, 180, 360, INK, STROKE)
    cv2.ellipse(img, (r, h - r - 1), (r - 2, r - 2), 0, 0, 180, INK, STROKE)
    cv2.line(img, (1, r), (1, h - r - 1), INK, STROKE)
    cv2.line(img, (w - 2, r), (w - 2, h - r - 1), INK, STROKE)
    return Template("vessel_capsule", img, SymbolClass.TANK_VESSEL, side_ports(w, h))


def _tank() -> Template:
    w, h = 150, 110
    img = _canvas(w, h)
    cv2.rectangle(img, (1, 30), (w - 2, h - 2), INK, STROKE)
    cv2.ellipse(img, (w // 2, 30), (w // 2 - 2, 28), 0, 180, 360, INK, STROKE)
    return Template("tank_dome", img, SymbolClass.TANK_VESSEL, side_ports(w, h))


def _valve() -> Template:
    w, h = 80, 48
    img = _canvas(w, h)
    pts = np.array([[1, 1], [w - 2, h - 2], [w - 2, 1], [1, h - 2]], np.int32)
    cv2.polylines(img, [pts], True, INK, STROKE)
    return Template("valve_gate", img, SymbolClass.VALVE, side_ports(w, h, "ew"))


def _valve_globe() -> Template:
    w, h = 80, 48
    img = _canvas(w, h)
    pts = np.array([[1, 1], [w - 2, h - 2], [w - 2, 1], [1, h - 2]], np.int32)
    cv2.polylines(img, [pts], True, INK, STROKE)
    cv2.circle(img, (w // 2, h // 2), 9, INK, -1)
    return Template("valve_globe", img, SymbolClass.VALVE, side_ports(w, h, "ew"))


def _pump() -> Template:
    d = 96
    img = _canvas(d, d)
    c = d // 2
    cv2.circle(img, (c, c), c - 2, INK, STROKE)
    tri = np.array([[c - 22, c - 28], [c - 22, c + 28], [c + 34, c]], np.int32)
    cv2.polylines(img, [tri], True, INK, STROKE)
    return Template("pump_centrifugal", img, SymbolClass.PUMP_COMPRESSOR, side_ports(d, d))


def _instrument() -> Template:
    d = 64
    img = _canvas(d, d)
    c = d // 2
    cv2.circle(img, (c, c), c - 2, INK, STROKE)
    cv2.line(img, (3, c), (d - 4, c), INK, STROKE)
    return Template("instrument_bubble", img, SymbolClass.INSTRUMENTATION, side_ports(d, d))


def _arrow() -> Template:
    w, h = 48, 36
    img = _canvas(w, h)
    tri = np.array([[0, 0], [0, h - 1], [w - 1, h // 2]], np.int32)
    cv2.fillPoly(img, [tri], INK)
    return Template("arrow_flow", img, SymbolClass.ARROW, side_ports(w, h, "ew"))


def _inlet() -> Template:
    w, h = 110, 50
    img = _canvas(w, h)
    pts = np.array([[1, 1], [w - 30, 1], [w - 2, h // 2], [w - 30, h - 2], [1, h - 2]], np.int32)
    cv2.polylines(img, [pts], True, INK, STROKE)
    return Template("inlet_flag", img, SymbolClass.INLET_OUTLET, side_ports(w, h, "ew"))


def default_templates() -> list[Template]:
    """Built-in library covering all seven symbol classes."""
    return [
        _general(),
        _general_exchanger(),
        _vessel(),
        _tank(),
        _valve(),
        _valve_globe(),
        _pump(),
        _instrument(),
        _arrow(),
        _inlet(),
    ]


def save_template_library(templates: list[Template], directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = []
    for t in templates:
        fname = f"{t.id}.png"
        write_png(directory / fname, t.raster)
        manifest.append(
            {"id": t.id, "class": t.cls.value, "file": fname, "ports": [[p.x, p.y] for p in t.ports]}
        )
    return write_json(directory / "manifest.json", manifest)


def load_template_library(directory: str | Path) -> list[Template]:
    """Read ``manifest.json`` ({id, class, ports[, file]}) and the PNGs next to it."""
    directory = Path(directory)
    entries = json.loads((directory / "manifest.json").read_text())
    out = []
    for entry in entries:
        fname = entry.get("file", f"{entry['id']}.png")
        raster = cv2.imread(str(directory / fname), cv2.IMREAD_GRAYSCALE)
        if raster is None:
            raise FileNotFoundError(directory / fname)
        ports = tuple(Point(float(x), float(y)) for x, y in entry["ports"])
        out.append(Template(str(entry["id"]), raster, SymbolClass(entry["class"]), ports))
    if not out:
        raise ValueError(f"empty template library in {directory}")
    return out
