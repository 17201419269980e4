"""P&ID graph toolkit: synthetic plans, modular digitization, patch stitching and graph metrics."""

from .graph import (
    BBox,
    DiagramGraph,
    EdgeClass,
    EdgeRecord,
    GraphFormatError,
    NodeKind,
    NodeRecord,
    SymbolClass,
    cleanup_graph,
    load_graphml,
    read_graphml,
    save_graphml,
    validate,
    write_graphml,
)

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "DiagramGraph",
    "EdgeClass",
    "EdgeRecord",
    "GraphFormatError",
    "NodeKind",
    "NodeRecord",
    "SymbolClass",
    "cleanup_graph",
    "load_graphml",
    "read_graphml",
    "save_graphml",
    "validate",
    "write_graphml",
]
