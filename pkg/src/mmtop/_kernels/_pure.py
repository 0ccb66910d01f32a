"""NumPy implementations of the hot element kernels.

These mirror the compiled routines in ``_core`` exactly; the package
selects one backend at import time (see ``mmtop._kernels``).
"""

import numpy as np

# Keep intermediate (points x sectors x dim) tensors below ~100 MB.
_CHUNK = 1 << 16


def classify_points(points, sector_matrices):
    """Assign each point of R^(M-1) to a sector, 0-based.

    ``sector_matrices[l]`` stacks the unit normals pointing into sector
    ``l``; a point belongs to the sector maximizing the smallest signed
    distance to its bounding hyperplanes.  Ties resolve to the smallest
    index, so boundary points classify deterministically.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    sector_matrices = np.ascontiguousarray(sector_matrices, dtype=np.float64)
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int32)
    for start in range(0, n, _CHUNK):
        chunk = points[start:start + _CHUNK]
        proj = np.einsum("lkd,pd->plk", sector_matrices, chunk)
        margins = proj.min(axis=2)
        labels[start:start + _CHUNK] = margins.argmax(axis=1)
    return labels


def element_fractions(nodal_values, barycentric, sector_matrices):
    """Per-element sector fractions by sampling a linear interpolant.

    nodal_values : (NT, 3, K) field values at the triangle corners
    barycentric : (S, 3) barycentric coordinates of the sample points
    sector_matrices : (M, K, K)

    Returns ``(fractions, labels)`` with fractions (NT, M) summing to 1
    per element and 0-based majority labels (NT,).
    """
    nodal_values = np.ascontiguousarray(nodal_values, dtype=np.float64)
    barycentric = np.ascontiguousarray(barycentric, dtype=np.float64)
    nt = nodal_values.shape[0]
    ns = barycentric.shape[0]
    m = sector_matrices.shape[0]
    counts = np.empty((nt, m), dtype=np.int64)
    step = max(1, _CHUNK // max(ns, 1))
    for start in range(0, nt, step):
        block = nodal_values[start:start + step]
        pts = np.einsum("sb,tbk->tsk", barycentric, block)
        lab = classify_points(pts.reshape(-1, pts.shape[2]), sector_matrices)
        lab = lab.reshape(block.shape[0], ns)
        offsets = np.arange(block.shape[0], dtype=np.int64)[:, None] * m
        flat = np.bincount((lab + offsets).ravel(), minlength=block.shape[0] * m)
        counts[start:start + step] = flat.reshape(block.shape[0], m)
    fractions = counts / float(ns)
    labels = counts.argmax(axis=1).astype(np.int32)
    return fractions, labels


def p1_stiffness_entries(b_matrices, areas, lam, mu):
    """Dense 6x6 plane-stress stiffness blocks for every triangle.

    b_matrices : (NT, 3, 6) engineering strain-displacement matrices
    areas, lam, mu : (NT,) element areas and Lame parameters

    Returns (NT, 6, 6) with entry ``area * B^T D B`` per element, where
    D couples (e_xx, e_yy, gamma_xy).
    """
    b_matrices = np.ascontiguousarray(b_matrices, dtype=np.float64)
    nt = b_matrices.shape[0]
    d = np.zeros((nt, 3, 3))
    d[:, 0, 0] = d[:, 1, 1] = 2.0 * mu + lam
    d[:, 0, 1] = d[:, 1, 0] = lam
    d[:, 2, 2] = mu
    db = np.einsum("tij,tjk->tik", d, b_matrices)
    return np.einsum("tji,tjk,t->tik", b_matrices, db, areas)
