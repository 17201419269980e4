"""Write plans in the Complete/ + Patched/ folder layout and read patch folders back."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

import numpy as np

from ..fileio import write_json, write_png
from ..graph import BBox, DiagramGraph, read_graphml, write_graphml
from ..patcher import DEFAULT_STRUCTURAL_BOX, Patch, extract_patches, plan_patches

MANIFEST = "manifest.json"


def write_patch_dir(directory: str | Path, patches: list[Patch], full_size: tuple[int, int], detector_size: tuple[int, int] | None = None) -> Path:
    """One ``<p>.png`` + ``<p>.graphml`` per patch plus a manifest with the window offsets."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    windows = []
    for p, patch in enumerate(patches):
        if patch.image is not None:
            write_png(directory / f"{p}.png", patch.image)
        write_graphml(patch.local_graph, directory / f"{p}.graphml")
        w = patch.window
        windows.append({"file": f"{p}.graphml", "x": w.x_min, "y": w.y_min, "width": w.width, "height": w.height})
    manifest = {
        "full_size": list(full_size),
        "patch_size": [patches[0].window.width, patches[0].window.height] if patches else None,
        "detector_size": list(detector_size) if detector_size else None,
        "windows": windows,
    }
    return write_json(directory / MANIFEST, manifest)


def read_patch_dir(directory: str | Path) -> tuple[list[Patch], tuple[int, int] | None, tuple[int, int] | None]:
    """Inverse of ``write_patch_dir``; returns (patches, full_size, detector_size)."""
    directory = Path(directory)
    mpath = directory / MANIFEST
    if not mpath.exists():
        return [], None, None
    manifest = json.loads(mpath.read_text())
    patches = []
    for entry in manifest.get("windows", []):
        g = read_graphml(directory / entry["file"])
        w = float(entry.get("width", g.width))
        h = float(entry.get("height", g.height))
        x, y = float(entry["x"]), float(entry["y"])
        patches.append(Patch(BBox(x, y, x + w, y + h), None, g))
    full = tuple(manifest["full_size"]) if manifest.get("full_size") else None
    det = tuple(manifest["detector_size"]) if manifest.get("detector_size") else None
    return patches, full, det


def emit_dataset(
    plans: Iterable[tuple[np.ndarray, DiagramGraph]],
    layout_root: str | Path,
    set_name: str = "train",
    patch_size: tuple[int, int] | None = None,
    structural_box: float = DEFAULT_STRUCTURAL_BOX,
) -> Path:
    """Complete/<set>/<k>.png|.graphml and, with ``patch_size``, Patched/<set>/<k>/<p>.png|.graphml."""
    root = Path(layout_root)
    complete = root / "Complete" / set_name
    patched = root / "Patched" / set_name
    complete.mkdir(parents=True, exist_ok=True)
    patched.mkdir(parents=True, exist_ok=True)
    for k, (image, g) in enumerate(plans):
        write_png(complete / f"{k}.png", image)
        write_graphml(g, complete / f"{k}.graphml")
        if patch_size is None:
            continue
        h, w = image.shape[:2]
        plan = plan_patches((w, h), patch_size)
        patches = extract_patches(image, g, plan, structural_box)
        write_patch_dir(patched / str(k), patches, (w, h))
    return root
