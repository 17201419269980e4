# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_kernels_py``; identical results."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef inline double _fmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double _iou(double ax0, double ay0, double ax1, double ay1,
                       double bx0, double by0, double bx1, double by1) nogil:
    cdef double iw = _fmin(ax1, bx1) - _fmax(ax0, bx0)
    cdef double ih = _fmin(ay1, by1) - _fmax(ay0, by0)
    cdef double inter = 0.0
    if iw > 0 and ih > 0:
        inter = iw * ih
    cdef double union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union > 0:
        return inter / union
    if ax0 == bx0 and ay0 == by0 and ax1 == bx1 and ay1 == by1:
        return 1.0
    return 0.0


def pairwise_iou(a, b):
    cdef double[:, :] A = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    cdef double[:, :] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, :] O = out
    with nogil:
        for i in range(n):
            for j in range(m):
                O[i, j] = _iou(A[i, 0], A[i, 1], A[i, 2], A[i, 3], B[j, 0], B[j, 1], B[j, 2], B[j, 3])
    return out


def pairwise_giou(a, b):
    cdef double[:, :] A = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    cdef double[:, :] B = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], i, j
    cdef double iw, ih, inter, union, hull, iou
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, :] O = out
    with nogil:
        for i in range(n):
            for j in range(m):
                iw = _fmin(A[i, 2], B[j, 2]) - _fmax(A[i, 0], B[j, 0])
                ih = _fmin(A[i, 3], B[j, 3]) - _fmax(A[i, 1], B[j, 1])
                inter = iw * ih if (iw > 0 and ih > 0) else 0.0
                union = (A[i, 2] - A[i, 0]) * (A[i, 3] - A[i, 1]) + (B[j, 2] - B[j, 0]) * (B[j, 3] - B[j, 1]) - inter
                iou = _iou(A[i, 0], A[i, 1], A[i, 2], A[i, 3], B[j, 0], B[j, 1], B[j, 2], B[j, 3])
                hull = (_fmax(A[i, 2], B[j, 2]) - _fmin(A[i, 0], B[j, 0])) * (_fmax(A[i, 3], B[j, 3]) - _fmin(A[i, 1], B[j, 1]))
                if hull > 0:
                    O[i, j] = iou - (hull - union) / hull
                else:
                    O[i, j] = iou
    return out


def overlap_pairs(boxes):
    cdef double[:, :] B = np.ascontiguousarray(boxes, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = B.shape[0]
    if n < 2:
        e = np.zeros(0, dtype=np.int64)
        return e, e.copy(), np.zeros(0)
    cdef cnp.int64_t[:] order = np.argsort(np.asarray(B[:, 0]), kind="stable").astype(np.int64)
    cdef Py_ssize_t k, t, a, b
    cdef double iw, ih, inter, union
    out_i = []
    out_j = []
    out_v = []
    for k in range(n - 1):
        a = order[k]
        t = k + 1
        while t < n and B[order[t], 0] < B[a, 2]:
            b = order[t]
            iw = _fmin(B[a, 2], B[b, 2]) - _fmax(B[a, 0], B[b, 0])
            ih = _fmin(B[a, 3], B[b, 3]) - _fmax(B[a, 1], B[b, 1])
            if iw > 0 and ih > 0:
                inter = iw * ih
                union = (B[a, 2] - B[a, 0]) * (B[a, 3] - B[a, 1]) + (B[b, 2] - B[b, 0]) * (B[b, 3] - B[b, 1]) - inter
                out_i.append(a if a < b else b)
                out_j.append(b if a < b else a)
                out_v.append(inter / union)
            t += 1
    return (
        np.asarray(out_i, dtype=np.int64),
        np.asarray(out_j, dtype=np.int64),
        np.asarray(out_v, dtype=np.float64),
    )


def linear_sum_assignment(cost):
    cdef double[:, :] a = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(n + 1)
    p_arr = np.zeros(n + 1, dtype=np.int64)
    way_arr = np.zeros(n + 1, dtype=np.int64)
    minv_arr = np.empty(n + 1)
    used_arr = np.empty(n + 1, dtype=np.uint8)
    cdef double[:] u = u_arr, v = v_arr, minv = minv_arr
    cdef cnp.int64_t[:] p = p_arr, way = way_arr
    cdef unsigned char[:] used = used_arr
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
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
