# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled element kernels: sector classification, subdivision fraction
sampling, and P1 plane-stress stiffness blocks.

Semantics match ``mmtop._kernels._pure`` exactly (ties, index bases,
orderings); the parity tests compare the two backends.
"""

import numpy as np

DEF MAX_DIM = 64


cdef inline int _classify_one(const double* p, const double[:, :, ::1] mats,
                              Py_ssize_t m, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t l, r, c
    cdef double margin, row, best
    cdef int best_l = 0
    best = -1e300
    for l in range(m):
        margin = 1e300
        for r in range(k):
            row = 0.0
            for c in range(k):
                row += mats[l, r, c] * p[c]
            if row < margin:
                margin = row
        if margin > best:
            best = margin
            best_l = <int>l
    return best_l


def classify_points(points, sector_matrices):
    """Assign each point of R^(M-1) to a sector, 0-based.

    Ties resolve to the smallest sector index, matching the fallback.
    """
    pts_arr = np.ascontiguousarray(points, dtype=np.float64)
    mats_arr = np.ascontiguousarray(sector_matrices, dtype=np.float64)
    cdef const double[:, ::1] pts = pts_arr
    cdef const double[:, :, ::1] mats = mats_arr
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t k = pts.shape[1]
    cdef Py_ssize_t m = mats.shape[0]
    if k > MAX_DIM:
        raise ValueError("compiled kernel supports at most %d dimensions" % MAX_DIM)
    labels_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] labels = labels_arr
    cdef double p[MAX_DIM]
    cdef Py_ssize_t i, c
    with nogil:
        for i in range(n):
            for c in range(k):
                p[c] = pts[i, c]
            labels[i] = _classify_one(p, mats, m, k)
    return labels_arr


def element_fractions(nodal_values, barycentric, sector_matrices):
    """Per-element sector fractions by sampling a linear interpolant.

    Returns ``(fractions, labels)``; see the fallback for the contract.
    """
    nodal_arr = np.ascontiguousarray(nodal_values, dtype=np.float64)
    bary_arr = np.ascontiguousarray(barycentric, dtype=np.float64)
    mats_arr = np.ascontiguousarray(sector_matrices, dtype=np.float64)
    cdef const double[:, :, ::1] nodal = nodal_arr
    cdef const double[:, ::1] bary = bary_arr
    cdef const double[:, :, ::1] mats = mats_arr
    cdef Py_ssize_t nt = nodal.shape[0]
    cdef Py_ssize_t ns = bary.shape[0]
    cdef Py_ssize_t k = nodal.shape[2]
    cdef Py_ssize_t m = mats.shape[0]
    if k > MAX_DIM or m > MAX_DIM:
        raise ValueError("compiled kernel supports at most %d materials" % MAX_DIM)
    frac_arr = np.empty((nt, m), dtype=np.float64)
    labels_arr = np.empty(nt, dtype=np.int32)
    cdef double[:, ::1] frac = frac_arr
    cdef int[::1] labels = labels_arr
    cdef double p[MAX_DIM]
    cdef long counts[MAX_DIM]
    cdef Py_ssize_t t, s, c, l
    cdef int lab
    cdef long best
    with nogil:
        for t in range(nt):
            for l in range(m):
                counts[l] = 0
            for s in range(ns):
                for c in range(k):
                    p[c] = (bary[s, 0] * nodal[t, 0, c]
                            + bary[s, 1] * nodal[t, 1, c]
                            + bary[s, 2] * nodal[t, 2, c])
                counts[_classify_one(p, mats, m, k)] += 1
            best = -1
            lab = 0
            for l in range(m):
                frac[t, l] = counts[l] / <double>ns
                if counts[l] > best:
                    best = counts[l]
                    lab = <int>l
            labels[t] = lab
    return frac_arr, labels_arr


def p1_stiffness_entries(b_matrices, areas, lam, mu):
    """Dense 6x6 plane-stress stiffness blocks, ``area * B^T D B``."""
    b_arr = np.ascontiguousarray(b_matrices, dtype=np.float64)
    area_arr = np.ascontiguousarray(areas, dtype=np.float64)
    lam_arr = np.ascontiguousarray(lam, dtype=np.float64)
    mu_arr = np.ascontiguousarray(mu, dtype=np.float64)
    cdef const double[:, :, ::1] b = b_arr
    cdef const double[::1] area = area_arr
    cdef const double[::1] lm = lam_arr
    cdef const double[::1] sh = mu_arr
    cdef Py_ssize_t nt = b.shape[0]
    out_arr = np.empty((nt, 6, 6), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t t, i, j
    cdef double d0, d1, d2, a
    with nogil:
        for t in range(nt):
            d0 = 2.0 * sh[t] + lm[t]
            d1 = lm[t]
            d2 = sh[t]
            a = area[t]
            for i in range(6):
                for j in range(6):
                    out[t, i, j] = a * (
                        d0 * (b[t, 0, i] * b[t, 0, j] + b[t, 1, i] * b[t, 1, j])
                        + d1 * (b[t, 0, i] * b[t, 1, j] + b[t, 1, i] * b[t, 0, j])
                        + d2 * b[t, 2, i] * b[t, 2, j])
    return out_arr
