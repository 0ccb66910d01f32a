"""Partition of R^(M-1) into M convex sector cones, one per material.

Sector ``l`` is the open cone positively spanned by the anchor directions
``{P_i : i != l}``; equivalently the set of points with positive dot
product against every inward unit normal ``n^{i->l}``.  The per-sector
normal matrices and their inverses drive the generalized derivative
remap, so they are assembled once here and kept immutable.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SectorConstructionError

logger = logging.getLogger(__name__)

# Condition numbers beyond this are treated as numerically singular.
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SectorStructure:
    """Anchor points, oriented unit normals and sector normal matrices.

    normals[i-1, j-1] holds ``n^{i->j}`` for materials i != j; the
    reverse entry is the exact negation of the same vector.
    ``normal_matrices[l-1]`` stacks the rows ``n^{i->l}`` for i != l in
    ascending i, and ``inverses[l-1]`` is its precomputed inverse.
    """

    M: int
    anchors: np.ndarray
    normals: np.ndarray
    normal_matrices: np.ndarray
    inverses: np.ndarray
    condition_numbers: np.ndarray

    @property
    def dim(self) -> int:
        return self.M - 1


def default_anchors(M: int) -> np.ndarray:
    """Unit-vector anchors P_1..P_{M-1} plus P_M = (-1, ..., -1)."""
    anchors = np.vstack([np.eye(M - 1), -np.ones((1, M - 1))])
    return anchors


def _hyperplane_normal(anchors: np.ndarray, i: int, j: int) -> np.ndarray:
    """Unit normal of span{P_k : k not in {i, j}}, oriented toward P_i.

    i, j are 0-based here.  The spanning set has M-2 vectors in
    R^(M-1); a one-dimensional null space is required.
    """
    m = anchors.shape[0]
    keep = [k for k in range(m) if k not in (i, j)]
    span = anchors[keep]
    _, s, vt = np.linalg.svd(span)
    tol = max(span.shape) * np.finfo(float).eps * (s[0] if s.size else 1.0)
    rank = int((s > tol).sum())
    if rank != m - 2:
        raise SectorConstructionError(
            f"anchors spanning the separating hyperplane of pair "
            f"({i + 1},{j + 1}) are linearly dependent")
    normal = vt[-1]
    side = normal @ anchors[i]
    if abs(side) < 1e-12:
        raise SectorConstructionError(
            f"anchor P_{i + 1} lies on the hyperplane separating sectors "
            f"{i + 1} and {j + 1}")
    if side < 0.0:
        normal = -normal
    return normal


def create_sector_structure(M: int, anchors: np.ndarray | None = None) -> SectorStructure:
    """Build the sector decomposition of R^(M-1) for M materials.

    The default anchors are the unit vectors plus the all-minus-ones
    point.  Custom anchors are accepted but must yield invertible
    normal matrices and a genuine conic partition.
    """
    if M < 2:
        raise ValueError(f"material count must be >= 2, got {M}")
    if anchors is None:
        anchors = default_anchors(M)
    else:
        anchors = np.asarray(anchors, dtype=np.float64)
        if anchors.shape != (M, M - 1):
            raise ValueError(
                f"anchors must have shape ({M}, {M - 1}), got {anchors.shape}")

    dim = M - 1
    normals = np.zeros((M, M, dim))
    for i, j in itertools.combinations(range(M), 2):
        n = _hyperplane_normal(anchors, i, j)
        normals[i, j] = n + 0.0  # drop negative zeros from the SVD
        normals[j, i] = -n + 0.0

    normal_matrices = np.empty((M, dim, dim))
    inverses = np.empty((M, dim, dim))
    conds = np.empty(M)
    for l in range(M):
        rows = [normals[i, l] for i in range(M) if i != l]
        mat = np.array(rows)
        conds[l] = np.linalg.cond(mat)
        if not np.isfinite(conds[l]) or conds[l] > _COND_LIMIT:
            raise SectorConstructionError(
                f"normal matrix of sector {l + 1} is numerically singular "
                f"(condition number {conds[l]:.3e}); invalid anchor set")
        normal_matrices[l] = mat
        inverses[l] = np.linalg.inv(mat)

    # A conic-combination interior point of each sector must classify
    # strictly into it; this rejects anchor sets that do not partition.
    for l in range(M):
        probe = anchors[[k for k in range(M) if k != l]].sum(axis=0)
        if not np.all(normal_matrices[l] @ probe > 0.0):
            raise SectorConstructionError(
                f"anchor set does not generate an open sector for material {l + 1}")

    for arr in (anchors, normals, normal_matrices, inverses, conds):
        arr.flags.writeable = False
    logger.debug("sector structure M=%d, max condition number %.3e",
                 M, conds.max())
    return SectorStructure(M=M, anchors=anchors, normals=normals,
                           normal_matrices=normal_matrices, inverses=inverses,
                           condition_numbers=conds)


def _check_pair(S: SectorStructure, i: int, j: int) -> None:
    if not (1 <= i <= S.M and 1 <= j <= S.M):
        raise ValueError(f"material indices must lie in 1..{S.M}, got ({i},{j})")
    if i == j:
        raise ValueError(f"material indices must differ, got i = j = {i}")


def get_normal(S: SectorStructure, i: int, j: int) -> np.ndarray:
    """Unit normal ``n^{i->j}`` pointing out of sector i into sector j."""
    _check_pair(S, i, j)
    return S.normals[i - 1, j - 1]


def is_in_sector(S: SectorStructure, p, l: int) -> bool:
    """Strict membership of point p in the open sector of material l.

    Boundary points belong to no open sector.
    """
    if not 1 <= l <= S.M:
        raise ValueError(f"sector index must lie in 1..{S.M}, got {l}")
    p = np.asarray(p, dtype=np.float64)
    return bool(np.all(S.normal_matrices[l - 1] @ p > 0.0))


def classify(S: SectorStructure, p) -> int:
    """Total classification of a point, 1-based.

    Interior points return their unique sector.  Boundary points return
    the smallest index among the sectors of maximal margin, so p = 0
    returns 1.
    """
    p = np.asarray(p, dtype=np.float64)
    margins = (S.normal_matrices @ p).min(axis=1)
    return int(margins.argmax()) + 1


def classify_points(S: SectorStructure, points) -> np.ndarray:
    """Vectorized :func:`classify` over an (N, M-1) point array."""
    points = np.asarray(points, dtype=np.float64)
    return _kernels.classify_points(points, S.normal_matrices) + 1
