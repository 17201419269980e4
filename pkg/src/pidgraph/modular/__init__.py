from .detect import Detection, DetectionSet, detect_symbols_template, detect_symbols_windows, load_detections, load_text_boxes
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
from .pipeline import PipelineParams, digitize

__all__ = [
    "Detection",
    "DetectionSet",
    "GraphGenParams",
    "LineParams",
    "PipelineParams",
    "binarize",
    "build_graph",
    "cluster_dashes",
    "detect_diagonal_lines",
    "detect_hv_lines",
    "detect_symbols_template",
    "detect_symbols_windows",
    "digitize",
    "load_detections",
    "load_text_boxes",
    "mask_regions",
    "merge_collinear",
]
