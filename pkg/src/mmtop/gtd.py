"""Generalized topological derivative fields.

The per-element vector of topological derivatives (one entry per target
material) is remapped through the inverse sector-normal matrix of the
element's source material.  The remapped vector G satisfies
``G . n^{j->i} = T^{i->j}`` for every target j, which is what makes the
fixed-point iteration a descent scheme.  Remapping happens per element,
where the source material is unambiguous, before nodal filtering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fields import filter_to_nodes
from .mesh import Mesh
from .sectors import SectorStructure


@dataclass
class TDField:
    """Per-element topological derivative vectors.

    source : (NT,) material labels in 1..M
    values : (NT, M-1) derivatives ordered by ascending target material,
        skipping the source
    """

    source: np.ndarray
    values: np.ndarray
    M: int

    def __post_init__(self):
        self.source = np.asarray(self.source, dtype=np.int32)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.source), self.M - 1):
            raise ValueError(
                f"TD values must have shape ({len(self.source)}, {self.M - 1})")

    def component_index(self, i: int, j: int) -> int:
        """Column of target j in the vector of an element with source i."""
        if i == j:
            raise ValueError("source and target material coincide")
        return j - 1 if j < i else j - 2


def map_to_g(S: SectorStructure, i: int, T) -> np.ndarray:
    """Remap one derivative vector through the source sector's inverse."""
    if not 1 <= i <= S.M:
        raise ValueError(f"source material must lie in 1..{S.M}, got {i}")
    return S.inverses[i - 1] @ np.asarray(T, dtype=np.float64)


def assemble_g_field(S: SectorStructure, td: TDField, mesh: Mesh) -> np.ndarray:
    """Nodal generalized derivative field, shape (NV, M-1).

    Element vectors are remapped with their source material's inverse
    normal matrix and then averaged to the vertices.
    """
    g_elem = np.empty_like(td.values)
    for l in range(1, S.M + 1):
        mask = td.source == l
        if np.any(mask):
            g_elem[mask] = td.values[mask] @ S.inverses[l - 1].T
    return filter_to_nodes(mesh, g_elem)


class OptimalityReport(NamedTuple):
    optimal: bool
    worst_value: float
    element: int
    target: int


def check_local_optimality(td: TDField) -> OptimalityReport:
    """Strict positivity of every derivative component.

    A design is locally optimal when no infinitesimal material swap can
    decrease the objective, i.e. all components are > 0.  The report
    carries the most negative component for diagnostics.
    """
    flat = int(np.argmin(td.values))
    element, col = divmod(flat, td.M - 1)
    worst = float(td.values[element, col])
    src = int(td.source[element])
    target = col + 1 if col + 1 < src else col + 2
    return OptimalityReport(optimal=bool(np.all(td.values > 0.0)),
                            worst_value=worst, element=element, target=target)
