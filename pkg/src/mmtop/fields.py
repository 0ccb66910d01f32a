"""Discrete vector level-set calculus on triangular meshes.

Fields live at mesh vertices with values in R^(M-1); the lumped L2
inner product keeps normalization and angle computations diagonal and
cheap.  Element classification samples the linear interpolant at the
centroids of a uniform subdivision, which generalizes volume-fraction
computation to any material count without polygon clipping.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import DegenerateFieldError
from .mesh import Mesh
from .sectors import SectorStructure

logger = logging.getLogger(__name__)


@dataclass
class VectorLevelSet:
    """Per-vertex field into R^(M-1) representing an M-material design."""

    values: np.ndarray
    M: int

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != self.M - 1:
            raise ValueError(
                f"level-set values must have shape (NV, {self.M - 1})")


@dataclass
class MaterialMap:
    """Per-element majority labels (1..M) and volume fractions (NT, M)."""

    labels: np.ndarray
    fractions: np.ndarray
    M: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        self.fractions = np.asarray(self.fractions, dtype=np.float64)


def _check_fields(mesh: Mesh, *fields: VectorLevelSet):
    dims = {f.values.shape for f in fields}
    if len(dims) > 1:
        raise ValueError(f"fields have mismatched shapes: {dims}")
    for f in fields:
        if f.values.shape[0] != mesh.num_vertices:
            raise ValueError(
                f"field has {f.values.shape[0]} vertex values, mesh has "
                f"{mesh.num_vertices} vertices")


def l2_inner(mesh: Mesh, a: VectorLevelSet, b: VectorLevelSet) -> float:
    """Lumped-mass L2 inner product of two vertex fields."""
    _check_fields(mesh, a, b)
    pointwise = np.einsum("vk,vk->v", a.values, b.values)
    return float(mesh.lumped_masses @ pointwise)


def l2_norm(mesh: Mesh, a: VectorLevelSet) -> float:
    return float(np.sqrt(l2_inner(mesh, a, a)))


def normalize(mesh: Mesh, psi: VectorLevelSet) -> VectorLevelSet:
    """Rescale a field to unit L2 norm."""
    norm = l2_norm(mesh, psi)
    if norm == 0.0:
        raise DegenerateFieldError("cannot normalize a field with zero L2 norm")
    return VectorLevelSet(psi.values / norm, psi.M)


@lru_cache(maxsize=None)
def subdivision_barycentric(depth: int) -> np.ndarray:
    """Barycentric coordinates of the 4^depth sub-triangle centroids.

    Depth 0 is the single centroid (1/3, 1/3, 1/3).
    """
    if depth < 0:
        raise ValueError("subdivision depth must be >= 0")
    corners = [np.eye(3)]
    for _ in range(depth):
        refined = []
        for tri in corners:
            v1, v2, v3 = tri
            m12, m13, m23 = 0.5 * (v1 + v2), 0.5 * (v1 + v3), 0.5 * (v2 + v3)
            refined += [np.array([v1, m12, m13]), np.array([m12, v2, m23]),
                        np.array([m13, m23, v3]), np.array([m12, m23, m13])]
        corners = refined
    out = np.array([tri.mean(axis=0) for tri in corners])
    out.flags.writeable = False
    return out


def classify_elements(mesh: Mesh, psi: VectorLevelSet, S: SectorStructure,
                      depth: int = 0) -> MaterialMap:
    """Material labels and volume fractions from a level-set field.

    The field is interpolated linearly on each triangle and classified
    at the centroids of 4^depth congruent sub-triangles; depth 0 is
    plain centroid classification.
    """
    _check_fields(mesh, psi)
    if psi.M != S.M:
        raise ValueError(f"field has M={psi.M} but sectors have M={S.M}")
    bary = subdivision_barycentric(depth)
    nodal = psi.values[mesh.triangles]
    fractions, labels0 = _kernels.element_fractions(nodal, bary,
                                                    S.normal_matrices)
    return MaterialMap(labels0 + 1, fractions, S.M)


def filter_to_nodes(mesh: Mesh, element_values: np.ndarray) -> np.ndarray:
    """Average element data to vertices (unweighted over incident cells).

    Acts as a sensitivity filter: element-constant derivative data
    becomes a continuous nodal field.  Isolated vertices receive zeros.
    """
    element_values = np.asarray(element_values, dtype=np.float64)
    squeeze = element_values.ndim == 1
    if squeeze:
        element_values = element_values[:, None]
    if element_values.shape[0] != mesh.num_triangles:
        raise ValueError("element data length does not match the mesh")
    if np.any(mesh.vertex_degrees == 0):
        logger.warning("mesh has isolated vertices; filtered values set to 0")
    out = mesh.vertex_averaging @ element_values
    return out[:, 0] if squeeze else out


def material_volumes(mesh: Mesh, mm: MaterialMap) -> np.ndarray:
    """Fraction-weighted area occupied by each material, shape (M,)."""
    return mm.fractions.T @ mesh.areas


def constant_field(mesh: Mesh, vector, M: int) -> VectorLevelSet:
    """Spatially constant field with the given R^(M-1) value."""
    vector = np.asarray(vector, dtype=np.float64)
    return VectorLevelSet(np.tile(vector, (mesh.num_vertices, 1)), M)
