# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy assignment over cosine scores.

Same contract and tie-breaking as the numpy fallback: queries in row order,
best remaining candidate wins, lowest index on ties, scores clamped to
[-1, 1] and optionally compared on a grid of spacing ``resolution``. The
alive list is compacted in place so each scan only touches remaining
candidates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport rint

cnp.import_array()


def greedy_assign(cand_unit, query_unit, resolution=None):
    cand = np.ascontiguousarray(cand_unit, dtype=np.float64)
    quer = np.ascontiguousarray(query_unit, dtype=np.float64)
    if cand.ndim != 2 or quer.ndim != 2 or cand.shape[1] != quer.shape[1]:
        raise ValueError("greedy_assign: inputs must be 2-D with matching dimension")
    if resolution is not None and not 0.0 < resolution <= 1.0:
        raise ValueError(f"greedy_assign: resolution must lie in (0, 1], got {resolution}")

    cdef double[:, ::1] c = cand
    cdef double[:, ::1] q = quer
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t d = c.shape[1]
    cdef Py_ssize_t m = q.shape[0]
    if m > n:
        raise ValueError(f"greedy_assign: more queries ({m}) than candidates ({n})")

    cdef bint quantize = resolution is not None
    cdef double inv = 1.0 / resolution if quantize else 1.0

    out_arr = np.empty(m, dtype=np.int64)
    alive_arr = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef cnp.int64_t[::1] alive = alive_arr
    cdef Py_ssize_t n_alive = n
    cdef Py_ssize_t i, j, k, best_pos
    cdef cnp.int64_t ci
    cdef double best, s

    for i in range(m):
        best = -2.0 * inv
        best_pos = 0
        for j in range(n_alive):
            ci = alive[j]
            s = 0.0
            for k in range(d):
                s += c[ci, k] * q[i, k]
            if s > 1.0:
                s = 1.0
            elif s < -1.0:
                s = -1.0
            if quantize:
                s = rint(s * inv)
            if s > best:
                best = s
                best_pos = j
        out[i] = alive[best_pos]
        for j in range(best_pos, n_alive - 1):
            alive[j] = alive[j + 1]
        n_alive -= 1
    return out_arr
