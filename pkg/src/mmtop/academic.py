"""PDE-free multi-material benchmark with a closed-form optimum.

Each material ell carries a cost density f_ell(x) = w_ell * |x - c_ell|
- d_ell on the unit square; the objective integrates the density of the
material occupying each point.  The optimal design assigns every point
the material of minimal density, a nested arrangement of disks and four
lens-shaped pockets for the default eight-material data, which makes
the problem a sharp correctness oracle for the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import MaterialMap
from .gtd import TDField
from .mesh import Mesh
from .optimizer import ProblemState
from .sectors import SectorStructure

_DEFAULT_WEIGHTS = (0.0, 1.0, 5.0 / 4.0, 95.0 / 12.0, 2.0, 2.0, 2.0, 2.0)
_DEFAULT_CENTERS = (None, (0.5, 0.5), (0.5, 0.5), (0.5, 0.5),
                    (0.5, 0.7875), (0.7875, 0.5), (0.5, 0.2125), (0.2125, 0.5))
_DEFAULT_OFFSETS = (0.0, 0.45, 0.5, 1.0, 0.275, 0.275, 0.275, 0.275)


@dataclass
class AcademicSpec:
    """Weights, centers and offsets of the per-material cost densities.

    The center may be None only for materials with zero weight.
    """

    weights: tuple[float, ...]
    centers: tuple[tuple[float, float] | None, ...]
    offsets: tuple[float, ...]

    def __post_init__(self):
        if not len(self.weights) == len(self.centers) == len(self.offsets):
            raise ValueError("weights, centers and offsets must align")
        for w, c in zip(self.weights, self.centers):
            if c is None and w != 0.0:
                raise ValueError("a center is required for nonzero weight")

    @property
    def M(self) -> int:
        return len(self.weights)

    @classmethod
    def default(cls) -> "AcademicSpec":
        """Eight-material data with nested-disk optimum on (0,1)^2."""
        return cls(_DEFAULT_WEIGHTS, _DEFAULT_CENTERS, _DEFAULT_OFFSETS)


def f_eval(spec: AcademicSpec, ell: int, x) -> float:
    """Cost density of material ell at a point."""
    if not 1 <= ell <= spec.M:
        raise ValueError(f"material must lie in 1..{spec.M}, got {ell}")
    w = spec.weights[ell - 1]
    d = spec.offsets[ell - 1]
    if w == 0.0:
        return -d
    c = np.asarray(spec.centers[ell - 1])
    return float(w * np.linalg.norm(np.asarray(x, dtype=float) - c) - d)


def f_all(spec: AcademicSpec, points) -> np.ndarray:
    """Densities of all materials at many points, shape (N, M)."""
    points = np.asarray(points, dtype=np.float64)
    out = np.empty((len(points), spec.M))
    for ell in range(spec.M):
        w, d = spec.weights[ell], spec.offsets[ell]
        if w == 0.0:
            out[:, ell] = -d
        else:
            c = np.asarray(spec.centers[ell])
            out[:, ell] = w * np.linalg.norm(points - c, axis=1) - d
    return out


def td_academic(spec: AcademicSpec, i: int, j: int, z) -> float:
    """Derivative of the objective for swapping material i to j at z."""
    if i == j:
        raise ValueError("source and target material coincide")
    return f_eval(spec, j, z) - f_eval(spec, i, z)


def objective(spec: AcademicSpec, mesh: Mesh, mm: MaterialMap) -> float:
    """Midpoint quadrature of the occupied densities, fraction-weighted."""
    densities = f_all(spec, mesh.centroids)
    per_element = np.einsum("tm,tm->t", mm.fractions, densities)
    return float(mesh.areas @ per_element)


def exact_label(spec: AcademicSpec, x) -> int:
    """Material of minimal density at a point; ties take the smallest."""
    values = [f_eval(spec, ell, x) for ell in range(1, spec.M + 1)]
    return int(np.argmin(values)) + 1


def exact_labels(spec: AcademicSpec, points) -> np.ndarray:
    """Vectorized :func:`exact_label`, 1-based."""
    return f_all(spec, points).argmin(axis=1).astype(np.int32) + 1


class AcademicProblem:
    """Optimizer adapter: closed-form objective and derivative vectors.

    The objective uses midpoint (centroid) quadrature.  The per-element
    derivative vectors average the densities over the three vertices
    instead, which smooths the borderline elements at interface tips
    where two densities are nearly tangent; centroid sampling there can
    delay single-element label flips far into the convergent tail.
    """

    def __init__(self, spec: AcademicSpec, mesh: Mesh, sectors: SectorStructure):
        if spec.M != sectors.M:
            raise ValueError("spec and sector structure disagree on M")
        self.spec = spec
        self.mesh = mesh
        self.sectors = sectors
        self._centroid_densities = f_all(spec, mesh.centroids)
        vertex_densities = f_all(spec, mesh.vertices)
        self._element_densities = vertex_densities[mesh.triangles].mean(axis=1)

    def evaluate(self, mm: MaterialMap) -> ProblemState:
        per_element = np.einsum("tm,tm->t", mm.fractions,
                                self._centroid_densities)
        return ProblemState(objective=float(self.mesh.areas @ per_element))

    def td_field(self, mm: MaterialMap, state: ProblemState) -> TDField:
        m = self.spec.M
        dens = self._element_densities
        values = np.empty((self.mesh.num_triangles, m - 1))
        for ell in range(1, m + 1):
            mask = mm.labels == ell
            if not np.any(mask):
                continue
            targets = [j for j in range(m) if j != ell - 1]
            values[mask] = (dens[np.ix_(mask, targets)]
                            - dens[mask, ell - 1][:, None])
        return TDField(source=mm.labels, values=values, M=m)
