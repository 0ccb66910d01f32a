"""Plane-stress linearized elasticity on P1 triangles.

Compliance minimization with three isotropic phases (strong, weak,
void): element tensors are interpolated from volume fractions in cut
elements, the compliance objective adds per-material volume penalties,
and topological derivatives come from circular-inclusion polarization
tensors evaluated on the element-constant strains.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateMaterialPairError, RigidBodyModeError
from .fields import MaterialMap, material_volumes
from .gtd import TDField
from .mesh import Mesh, rect_mesh, tag_boundary, union_rect_mesh
from .optimizer import ProblemState
from .sectors import SectorStructure, create_sector_structure

logger = logging.getLogger(__name__)

_RESIDUAL_TOL = 1e-10
_GEOM_TOL = 1e-9


def lame(E: float, nu: float) -> tuple[float, float]:
    """Plane-stress Lame parameters (lambda, mu) from (E, nu)."""
    if E <= 0.0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not 0.0 <= nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - nu))
    return lam, mu


@dataclass
class ElasticMaterial:
    """Isotropic phase: stiffness data plus its volume-penalty weight.

    lam and mu default to the plane-stress reduction of (E, nu) but can
    be overridden, which the void phase uses for its stiffness floor.
    """

    E: float
    nu: float
    ell: float = 0.0
    lam: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.lam is None or self.mu is None:
            self.lam, self.mu = lame(self.E, self.nu)


def default_materials() -> tuple[ElasticMaterial, ElasticMaterial, ElasticMaterial]:
    """Strong, weak and void phases for the compliance benchmarks.

    The void stiffness tensor is floored at 1e-4 times the sum of the
    solid tensors; its raw (E, nu) still parameterize the derivative
    coefficients.
    """
    strong = ElasticMaterial(E=1.0, nu=0.3333, ell=2.0)
    weak = ElasticMaterial(E=0.5, nu=0.3333, ell=0.5)
    void = ElasticMaterial(E=1e-4, nu=0.3333e-4, ell=0.0,
                           lam=1e-4 * (strong.lam + weak.lam),
                           mu=1e-4 * (strong.mu + weak.mu))
    return strong, weak, void


def apply_tensor(material: ElasticMaterial, e: np.ndarray) -> np.ndarray:
    """Stress 2*mu*e + lambda*tr(e)*I for a symmetric 2x2 strain."""
    e = np.asarray(e, dtype=np.float64)
    return 2.0 * material.mu * e + material.lam * np.trace(e) * np.eye(2)


def interpolate_element_tensor(materials: Sequence[ElasticMaterial],
                               fractions) -> tuple[np.ndarray, np.ndarray]:
    """Fraction-weighted (lambda, mu) per element for cut-cell averaging."""
    fractions = np.atleast_2d(np.asarray(fractions, dtype=np.float64))
    lams = np.array([m.lam for m in materials])
    mus = np.array([m.mu for m in materials])
    return fractions @ lams, fractions @ mus


@dataclass(frozen=True)
class PolarizationCoefficients:
    alpha: float
    beta: float
    gamma: float
    tau1: float
    tau2: float
    tau3: float


@dataclass(frozen=True)
class Polarization:
    """Action of the circular-inclusion polarization tensor.

    Applied to a symmetric 2x2 matrix e the tensor acts as
    c1 * e + c2 * tr(e) * I.
    """

    coefficients: PolarizationCoefficients
    c1: float
    c2: float

    def apply(self, e: np.ndarray) -> np.ndarray:
        e = np.asarray(e, dtype=np.float64)
        return self.c1 * e + self.c2 * np.trace(e) * np.eye(2)


def polarization(mat_i: ElasticMaterial, mat_j: ElasticMaterial) -> Polarization:
    """Polarization tensor for an inclusion of material j inside i.

    For identical phases both coefficients vanish analytically.  The
    tau3 ratio is 1 whenever the Poisson ratios agree, which also
    covers the removable singularity of its denominator at nu = 1/3.
    """
    ei, nui = mat_i.E, mat_i.nu
    ej, nuj = mat_j.E, mat_j.nu
    alpha = (1.0 + nui) / (1.0 - nui)
    beta = (3.0 - nui) / (1.0 + nui)
    gamma = ej / ei
    tau1 = (1.0 + nuj) / (1.0 + nui)
    tau2 = (1.0 - nuj) / (1.0 - nui)
    if nui == nuj:
        tau3 = 1.0
    else:
        den3 = nui * (3.0 * nui - 4.0) + 1.0
        if den3 == 0.0:
            raise DegenerateMaterialPairError(
                f"tau3 denominator vanishes for source Poisson ratio {nui}")
        tau3 = (nuj * (3.0 * nui - 4.0) + 1.0) / den3
    den1 = beta * gamma + tau1
    den2 = alpha * gamma + tau2
    if den1 == 0.0 or den2 == 0.0:
        raise DegenerateMaterialPairError(
            f"polarization denominators vanish for pair "
            f"(E={ei},nu={nui}) -> (E={ej},nu={nuj})")
    c1 = (1.0 + beta) * (tau1 - gamma) / den1
    c2 = 0.5 * (alpha - beta) * (gamma * (gamma - 2.0 * tau3)
                                 + tau1 * tau2) / (den2 * den1)
    coeffs = PolarizationCoefficients(alpha, beta, gamma, tau1, tau2, tau3)
    return Polarization(coefficients=coeffs, c1=c1, c2=c2)


@dataclass
class BoundaryConditions:
    """Named boundary data: zero-displacement components per tag, constant
    surface tractions per tag, and optional single-dof pins."""

    dirichlet: dict[str, tuple[bool, bool]]
    neumann: dict[str, tuple[float, float]]
    extra_fixed: tuple[tuple[int, int], ...] = ()


@dataclass
class ElasticState:
    """Displacement, element strains (e_xx, e_yy, e_xy) and compliance."""

    u: np.ndarray
    strain: np.ndarray
    compliance: float


def p1_strain_matrices(mesh: Mesh) -> np.ndarray:
    """Engineering strain-displacement matrices, shape (NT, 3, 6).

    Rows give (e_xx, e_yy, gamma_xy) from the six nodal displacement
    components of a triangle.
    """
    p = mesh.vertices[mesh.triangles]
    inv2a = 1.0 / (2.0 * mesh.areas)
    bx = np.stack([p[:, 1, 1] - p[:, 2, 1],
                   p[:, 2, 1] - p[:, 0, 1],
                   p[:, 0, 1] - p[:, 1, 1]], axis=1) * inv2a[:, None]
    by = np.stack([p[:, 2, 0] - p[:, 1, 0],
                   p[:, 0, 0] - p[:, 2, 0],
                   p[:, 1, 0] - p[:, 0, 0]], axis=1) * inv2a[:, None]
    b = np.zeros((mesh.num_triangles, 3, 6))
    b[:, 0, 0::2] = bx
    b[:, 1, 1::2] = by
    b[:, 2, 0::2] = by
    b[:, 2, 1::2] = bx
    return b


class ElasticitySolver:
    """P1 Galerkin solver with cached mesh- and boundary-dependent data.

    Material maps change every optimization step while the mesh, the
    sparsity pattern, the load vector and the constraint set do not, so
    those are prepared once.
    """

    def __init__(self, mesh: Mesh, materials: Sequence[ElasticMaterial],
                 bc: BoundaryConditions):
        self.mesh = mesh
        self.materials = tuple(materials)
        self.bc = bc
        self.b_matrices = p1_strain_matrices(mesh)
        dofs = np.empty((mesh.num_triangles, 6), dtype=np.int64)
        dofs[:, 0::2] = 2 * mesh.triangles
        dofs[:, 1::2] = 2 * mesh.triangles + 1
        self._dofs = dofs
        self._rows = np.repeat(dofs, 6, axis=1).ravel()
        self._cols = np.tile(dofs, (1, 6)).ravel()
        self._load = self._assemble_load()
        self._fixed = self._fixed_mask()
        if not self._fixed.any():
            raise RigidBodyModeError("no displacement constraints given")
        self._free = np.flatnonzero(~self._fixed.ravel())

    def _assemble_load(self) -> np.ndarray:
        f = np.zeros(2 * self.mesh.num_vertices)
        for tag, g in self.bc.neumann.items():
            edges = self.mesh.edges_with_tag(tag)
            if len(edges) == 0:
                logger.warning("traction tag %r matches no boundary edges", tag)
            for a, b in edges:
                length = np.linalg.norm(self.mesh.vertices[b]
                                        - self.mesh.vertices[a])
                for v in (a, b):
                    f[2 * v] += 0.5 * length * g[0]
                    f[2 * v + 1] += 0.5 * length * g[1]
        return f

    def _fixed_mask(self) -> np.ndarray:
        fixed = np.zeros((self.mesh.num_vertices, 2), dtype=bool)
        for tag, (fix_x, fix_y) in self.bc.dirichlet.items():
            verts = self.mesh.vertices_with_tag(tag)
            if len(verts) == 0:
                logger.warning("support tag %r matches no boundary edges", tag)
            fixed[verts, 0] |= fix_x
            fixed[verts, 1] |= fix_y
        for vertex, component in self.bc.extra_fixed:
            fixed[vertex, component] = True
        return fixed

    def assemble(self, mm: MaterialMap) -> sp.csr_matrix:
        from . import _kernels

        lam_e, mu_e = interpolate_element_tensor(self.materials, mm.fractions)
        blocks = _kernels.p1_stiffness_entries(self.b_matrices,
                                               self.mesh.areas, lam_e, mu_e)
        n = 2 * self.mesh.num_vertices
        k = sp.coo_matrix((blocks.ravel(), (self._rows, self._cols)),
                          shape=(n, n)).tocsr()
        return k

    def solve(self, mm: MaterialMap) -> ElasticState:
        k = self.assemble(mm)
        free = self._free
        kff = k[free][:, free].tocsc()
        ff = self._load[free]
        try:
            lu = spla.splu(kff)
        except RuntimeError as exc:
            raise RigidBodyModeError(
                f"constrained stiffness matrix is singular: {exc}") from exc
        uf = lu.solve(ff)
        # One step of iterative refinement keeps the residual near
        # rounding level despite the 1e4 void stiffness contrast.
        uf += lu.solve(ff - kff @ uf)
        if not np.all(np.isfinite(uf)):
            raise RigidBodyModeError("solution is not finite; missing supports")
        fnorm = np.linalg.norm(ff)
        residual = np.linalg.norm(kff @ uf - ff)
        if fnorm > 0.0 and residual > _RESIDUAL_TOL * fnorm:
            raise RigidBodyModeError(
                f"linear solve stagnated at relative residual "
                f"{residual / fnorm:.3e}")
        u = np.zeros(2 * self.mesh.num_vertices)
        u[free] = uf
        strain_eng = np.einsum("tij,tj->ti", self.b_matrices,
                               u[self._dofs])
        strain = strain_eng.copy()
        strain[:, 2] *= 0.5
        compliance = float(u @ (k @ u))
        return ElasticState(u=u.reshape(-1, 2), strain=strain,
                            compliance=compliance)


def solve(mesh: Mesh, mm: MaterialMap, materials: Sequence[ElasticMaterial],
          bc: BoundaryConditions) -> ElasticState:
    """One-off solve; prefer :class:`ElasticitySolver` for repeated calls."""
    return ElasticitySolver(mesh, materials, bc).solve(mm)


def _td_coefficients(materials: Sequence[ElasticMaterial], i: int, j: int):
    pol = polarization(materials[i - 1], materials[j - 1])
    mat = materials[i - 1]
    penalty = materials[j - 1].ell - materials[i - 1].ell
    return pol.c1, pol.c2, mat.lam, mat.mu, penalty


def _td_values(strain: np.ndarray, c1, c2, lam, mu, penalty) -> np.ndarray:
    exx, eyy, exy = strain[:, 0], strain[:, 1], strain[:, 2]
    tr = exx + eyy
    ee = exx ** 2 + eyy ** 2 + 2.0 * exy ** 2
    energy = c1 * (2.0 * mu * ee + lam * tr ** 2) \
        + 2.0 * c2 * (mu + lam) * tr ** 2
    return energy + penalty


def td_elasticity(state: ElasticState, mm: MaterialMap,
                  materials: Sequence[ElasticMaterial], i: int, j: int,
                  element: int) -> float:
    """Derivative for swapping element's material i to j, one element."""
    if mm.labels[element] != i:
        raise ValueError(
            f"element {element} has majority material {mm.labels[element]}, "
            f"not {i}")
    coeffs = _td_coefficients(materials, i, j)
    return float(_td_values(state.strain[element:element + 1], *coeffs)[0])


def td_field_elasticity(state: ElasticState, mm: MaterialMap,
                        materials: Sequence[ElasticMaterial]) -> TDField:
    """Derivative vectors for all elements, majority-material sources."""
    m = len(materials)
    values = np.empty((len(mm.labels), m - 1))
    for i in range(1, m + 1):
        mask = mm.labels == i
        if not np.any(mask):
            continue
        strains = state.strain[mask]
        col = 0
        for j in range(1, m + 1):
            if j == i:
                continue
            coeffs = _td_coefficients(materials, i, j)
            values[mask, col] = _td_values(strains, *coeffs)
            col += 1
    return TDField(source=mm.labels, values=values, M=m)


def objective(mesh: Mesh, mm: MaterialMap, state: ElasticState,
              materials: Sequence[ElasticMaterial]) -> float:
    """Compliance plus the weighted material volumes."""
    volumes = material_volumes(mesh, mm)
    weights = np.array([m.ell for m in materials])
    return state.compliance + float(weights @ volumes)


class ElasticityProblem:
    """Optimizer adapter around the P1 solver."""

    def __init__(self, mesh: Mesh, materials: Sequence[ElasticMaterial],
                 bc: BoundaryConditions,
                 sectors: SectorStructure | None = None, name: str = "custom"):
        self.mesh = mesh
        self.materials = tuple(materials)
        self.sectors = sectors or create_sector_structure(len(self.materials))
        self.name = name
        self.solver = ElasticitySolver(mesh, self.materials, bc)

    def evaluate(self, mm: MaterialMap) -> ProblemState:
        state = self.solver.solve(mm)
        return ProblemState(objective=objective(self.mesh, mm, state,
                                                self.materials),
                            compliance=state.compliance, aux=state)

    def td_field(self, mm: MaterialMap, state: ProblemState) -> TDField:
        return td_field_elasticity(state.aux, mm, self.materials)


# Recommended step-size caps for the shipped benchmark geometries.
BENCHMARK_KAPPA = {"cantilever": 0.12, "bridge": 0.2, "mast": 0.1}


def cantilever_problem(nx: int = 60, ny: int = 30,
                       materials=None) -> ElasticityProblem:
    """Clamped left edge, downward traction on a mid-right window."""
    mesh = rect_mesh(-1.0, 0.0, 1.0, 1.0, nx, ny)
    mesh = tag_boundary(mesh, [
        ("dirichlet", lambda x, y: abs(x + 1.0) <= _GEOM_TOL),
        ("neumann", lambda x, y: abs(x - 1.0) <= _GEOM_TOL
         and 0.45 - _GEOM_TOL <= y <= 0.55 + _GEOM_TOL),
    ])
    bc = BoundaryConditions(dirichlet={"dirichlet": (True, True)},
                            neumann={"neumann": (0.0, -1.0)})
    return ElasticityProblem(mesh, materials or default_materials(), bc,
                             name="cantilever")


def bridge_problem(nx: int = 80, ny: int = 60,
                   materials=None) -> ElasticityProblem:
    """Bottom-center load, vertical-only supports at the bottom corners.

    The supports pin only the vertical component, so the horizontal
    rigid translation is removed by pinning the horizontal component of
    the vertex closest to the bottom center.
    """
    mesh = rect_mesh(-1.0, 0.0, 1.0, 1.5, nx, ny)
    mesh = tag_boundary(mesh, [
        ("support", lambda x, y: abs(y) <= _GEOM_TOL
         and (x <= -0.9 + _GEOM_TOL or x >= 0.9 - _GEOM_TOL)),
        ("neumann", lambda x, y: abs(y) <= _GEOM_TOL
         and abs(x) <= 0.05 + _GEOM_TOL),
    ])
    anchor = int(np.argmin(np.linalg.norm(mesh.vertices, axis=1)))
    bc = BoundaryConditions(dirichlet={"support": (False, True)},
                            neumann={"neumann": (0.0, -1.0)},
                            extra_fixed=((anchor, 0),))
    return ElasticityProblem(mesh, materials or default_materials(), bc,
                             name="bridge")


def mast_problem(nx: int = 20, ny: int = 30,
                 materials=None) -> ElasticityProblem:
    """Column clamped at the bottom with a loaded cross bar on top.

    nx must be even and ny divisible by 3 so that the column and bar
    grids share vertices along the junction line.
    """
    if nx % 2 or ny % 3:
        raise ValueError("mast resolution needs even nx and ny divisible by 3")
    mesh = union_rect_mesh([(-0.5, 0.0, 0.5, 1.5, nx, ny),
                            (-1.0, 1.5, 1.0, 2.0, 2 * nx, ny // 3)])
    mesh = tag_boundary(mesh, [
        ("dirichlet", lambda x, y: abs(y) <= _GEOM_TOL),
        ("neumann", lambda x, y: abs(y - 2.0) <= _GEOM_TOL
         and (x <= -0.9 + _GEOM_TOL or x >= 0.9 - _GEOM_TOL)),
    ])
    bc = BoundaryConditions(dirichlet={"dirichlet": (True, True)},
                            neumann={"neumann": (0.0, -1.0)})
    return ElasticityProblem(mesh, materials or default_materials(), bc,
                             name="mast")
