"""Pure-Python/numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when the
extension is not built or when ``PIDGRAPH_PURE_PYTHON=1``.
"""

from __future__ import annotations

import numpy as np


def pairwise_iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ix0 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy0 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix1 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy1 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix1 - ix0, 0, None) * np.clip(iy1 - iy0, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    same = np.all(a[:, None, :] == b[None, :, :], axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), np.where(same, 1.0, 0.0))
    return out


def pairwise_giou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    iou = pairwise_iou(a, b)
    ix0 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy0 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix1 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy1 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix1 - ix0, 0, None) * np.clip(iy1 - iy0, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    hx0 = np.minimum(a[:, None, 0], b[None, :, 0])
    hy0 = np.minimum(a[:, None, 1], b[None, :, 1])
    hx1 = np.maximum(a[:, None, 2], b[None, :, 2])
    hy1 = np.maximum(a[:, None, 3], b[None, :, 3])
    hull = (hx1 - hx0) * (hy1 - hy0)
    with np.errstate(divide="ignore", invalid="ignore"):
        penalty = np.where(hull > 0, (hull - union) / np.where(hull > 0, hull, 1.0), 0.0)
    return iou - penalty


def overlap_pairs(boxes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All index pairs (i < j) whose boxes intersect with positive area, plus their IoU."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    n = len(boxes)
    if n < 2:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    order = np.argsort(boxes[:, 0], kind="stable")
    sb = boxes[order]
    starts = sb[:, 0]
    out_i: list[np.ndarray] = []
    out_j: list[np.ndarray] = []
    out_v: list[np.ndarray] = []
    for k in range(n - 1):
        stop = np.searchsorted(starts, sb[k, 2], side="left")
        if stop <= k + 1:
            continue
        cand = sb[k + 1 : stop]
        iw = np.minimum(sb[k, 2], cand[:, 2]) - np.maximum(sb[k, 0], cand[:, 0])
        ih = np.minimum(sb[k, 3], cand[:, 3]) - np.maximum(sb[k, 1], cand[:, 1])
        hit = (iw > 0) & (ih > 0)
        if not hit.any():
            continue
        inter = iw[hit] * ih[hit]
        area_k = (sb[k, 2] - sb[k, 0]) * (sb[k, 3] - sb[k, 1])
        c = cand[hit]
        union = area_k + (c[:, 2] - c[:, 0]) * (c[:, 3] - c[:, 1]) - inter
        js = order[k + 1 : stop][hit]
        ik = np.full(len(js), order[k], dtype=np.int64)
        out_i.append(np.minimum(ik, js))
        out_j.append(np.maximum(ik, js))
        out_v.append(inter / union)
    if not out_i:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    return np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_v)


def linear_sum_assignment(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect assignment on a square matrix.

    Shortest-augmenting-path Hungarian method with dual potentials, O(n^3).
    Rows are inserted in index order; among equal reduced costs the lowest
    column index wins. Returns ``col`` with ``col[row]`` assigned.
    """
    a = np.asarray(cost, dtype=np.float64)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j]: row (1-based) owning column j
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        col[p[j] - 1] = j - 1
    return col
