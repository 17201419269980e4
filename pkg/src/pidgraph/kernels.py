"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set ``PIDGRAPH_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PIDGRAPH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on build
        log.debug("compiled kernels unavailable, using numpy fallback")
    else:
        _impl = _compiled
        BACKEND = "cython"

pairwise_iou = _impl.pairwise_iou
pairwise_giou = _impl.pairwise_giou
overlap_pairs = _impl.overlap_pairs
linear_sum_assignment = _impl.linear_sum_assignment

__all__ = [
    "BACKEND",
    "pairwise_iou",
    "pairwise_giou",
    "overlap_pairs",
    "linear_sum_assignment",
]
