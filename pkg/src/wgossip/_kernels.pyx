# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled float kernels for long-horizon gossip products."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def apply_schedule(double[:, ::1] P, const double[:, :, ::1] pre,
                   const cnp.int64_t[:, ::1] idx, const cnp.int64_t[::1] schedule,
                   Py_ssize_t reps=1):
    """In place P <- A_{e_L} ... A_{e_1} P, repeated ``reps`` times."""
    cdef Py_ssize_t width = P.shape[1]
    cdef Py_ssize_t k = pre.shape[1]
    cdef double[:, ::1] buf = np.empty((k, width), dtype=np.float64)
    cdef Py_ssize_t r, s, a, b, col, e
    cdef double* prow
    cdef double* brow
    cdef double c
    with nogil:
        for r in range(reps):
            for s in range(schedule.shape[0]):
                e = schedule[s]
                for a in range(k):
                    for col in range(width):
                        buf[a, col] = P[idx[e, a], col]
                for a in range(k):
                    prow = &P[idx[e, a], 0]
                    for col in range(width):
                        prow[col] = 0.0
                    for b in range(k):
                        c = pre[e, a, b]
                        if c != 0.0:
                            brow = &buf[b, 0]
                            for col in range(width):
                                prow[col] += c * brow[col]


def seminorm(const double[:, ::1] A):
    cdef Py_ssize_t i, j
    cdef double lo, hi, x, best = 0.0
    if A.shape[0] == 0:
        return 0.0
    for j in range(A.shape[1]):
        lo = A[0, j]
        hi = lo
        for i in range(1, A.shape[0]):
            x = A[i, j]
            if x < lo:
                lo = x
            elif x > hi:
                hi = x
        if hi - lo > best:
            best = hi - lo
    return best


def block_seminorms(const double[:, ::1] P, const cnp.int64_t[::1] members,
                    const cnp.int64_t[::1] offsets):
    """Seminorm of each principal block P[blk, blk]; blocks given CSR-style."""
    cdef Py_ssize_t nb = offsets.shape[0] - 1
    out = np.zeros(nb, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t bi, a, b, lo_i, hi_i
    cdef double lo, hi, x, best
    for bi in range(nb):
        lo_i = offsets[bi]
        hi_i = offsets[bi + 1]
        best = 0.0
        for b in range(lo_i, hi_i):
            lo = P[members[lo_i], members[b]]
            hi = lo
            for a in range(lo_i + 1, hi_i):
                x = P[members[a], members[b]]
                if x < lo:
                    lo = x
                elif x > hi:
                    hi = x
            if hi - lo > best:
                best = hi - lo
        res[bi] = best
    return out


def max_row_drift(const double[:, ::1] P):
    cdef Py_ssize_t i, j
    cdef double s, worst = 0.0
    for i in range(P.shape[0]):
        s = 0.0
        for j in range(P.shape[1]):
            s = s + P[i, j]
        if fabs(s - 1.0) > worst:
            worst = fabs(s - 1.0)
    return worst
