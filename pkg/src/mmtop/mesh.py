"""Two-dimensional triangulations: construction, tagging and ASCII I/O.

Structured crossed-diagonal meshes (four triangles per rectangular cell,
meeting at the cell center) are generated for rectangles and unions of
rectangles.  The symmetric pattern keeps vertex stars symmetric, which
the sensitivity filtering relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import MeshFormatError

_MERGE_TOL = 1e-9


@dataclass
class Mesh:
    """Triangulation with tagged boundary segments.

    vertices : (NV, 2) float64
    triangles : (NT, 3) int32, counter-clockwise
    boundary_edges : (NB, 2) int32, oriented with the domain on the left
    boundary_tags : tuple of NB tag strings
    areas : (NT,) precomputed triangle areas
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple[str, ...]
    areas: np.ndarray = field(init=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int32)
        self.boundary_edges = np.asarray(self.boundary_edges,
                                         dtype=np.int32).reshape(-1, 2)
        self.boundary_tags = tuple(self.boundary_tags)
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise MeshFormatError("one tag per boundary edge is required")
        self.areas = _signed_areas(self.vertices, self.triangles)
        if np.any(self.areas <= 0.0):
            bad = int(np.argmin(self.areas))
            raise MeshFormatError(
                f"triangle {bad} is degenerate or not counter-clockwise "
                f"(signed area {self.areas[bad]:.3e})")
        self._validate_topology()
        for arr in (self.vertices, self.triangles, self.boundary_edges,
                    self.areas):
            arr.flags.writeable = False

    def _validate_topology(self):
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise MeshFormatError("triangle references a missing vertex")
        counts = _edge_use_counts(self.triangles)
        if counts and max(counts.values()) > 2:
            raise MeshFormatError("an edge is shared by more than two triangles")
        boundary = {e for e, c in counts.items() if c == 1}
        for a, b in self.boundary_edges:
            if (min(a, b), max(a, b)) not in boundary:
                raise MeshFormatError(
                    f"tagged segment ({a},{b}) is not a boundary edge")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def lumped_masses(self) -> np.ndarray:
        """Diagonal L2 mass: one third of the incident triangle areas."""
        masses = np.zeros(self.num_vertices)
        np.add.at(masses, self.triangles.ravel(),
                  np.repeat(self.areas / 3.0, 3))
        return masses

    @cached_property
    def vertex_degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        np.add.at(deg, self.triangles.ravel(), 1)
        return deg

    @cached_property
    def vertex_averaging(self) -> sp.csr_matrix:
        """Sparse (NV, NT) operator averaging element data to vertices."""
        rows = self.triangles.ravel()
        cols = np.repeat(np.arange(self.num_triangles), 3)
        deg = np.maximum(self.vertex_degrees, 1)
        vals = 1.0 / deg[rows]
        mat = sp.csr_matrix((vals, (rows, cols)),
                            shape=(self.num_vertices, self.num_triangles))
        return mat

    def edges_with_tag(self, tag: str) -> np.ndarray:
        mask = np.array([t == tag for t in self.boundary_tags])
        return self.boundary_edges[mask]

    def vertices_with_tag(self, tag: str) -> np.ndarray:
        edges = self.edges_with_tag(tag)
        return np.unique(edges.ravel())


def _signed_areas(vertices, triangles):
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _edge_use_counts(triangles) -> dict:
    counts: dict[tuple[int, int], int] = {}
    for tri in np.asarray(triangles):
        a, b, c = (int(v) for v in tri)
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            counts[key] = counts.get(key, 0) + 1
    return counts


def _boundary_edges_oriented(triangles) -> np.ndarray:
    """Boundary edges in triangle traversal order (domain on the left)."""
    counts = _edge_use_counts(triangles)
    edges = []
    for tri in np.asarray(triangles):
        a, b, c = (int(v) for v in tri)
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            if counts[key] == 1:
                edges.append((u, v))
    return np.array(edges, dtype=np.int32).reshape(-1, 2)


def rect_mesh(x0: float, y0: float, x1: float, y1: float,
              nx: int, ny: int) -> Mesh:
    """Crossed-diagonal triangulation of the rectangle (x0,x1) x (y0,y1).

    Every cell contributes four triangles around its center, giving
    (nx+1)(ny+1) + nx*ny vertices and 4*nx*ny triangles.
    """
    if x1 <= x0 or y1 <= y0:
        raise ValueError("rectangle is degenerate")
    if nx < 1 or ny < 1:
        raise ValueError("resolution must be at least 1 cell per direction")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    gcx, gcy = np.meshgrid(cx, cy, indexing="ij")
    centers = np.column_stack([gcx.ravel(), gcy.ravel()])
    vertices = np.vstack([grid, centers])

    def gid(i, j):
        return i * (ny + 1) + j

    ncorner = (nx + 1) * (ny + 1)
    triangles = []
    for i in range(nx):
        for j in range(ny):
            c = ncorner + i * ny + j
            v00, v10 = gid(i, j), gid(i + 1, j)
            v11, v01 = gid(i + 1, j + 1), gid(i, j + 1)
            triangles += [(v00, v10, c), (v10, v11, c),
                          (v11, v01, c), (v01, v00, c)]
    triangles = np.array(triangles, dtype=np.int32)
    edges = _boundary_edges_oriented(triangles)
    return Mesh(vertices, triangles, edges, ("free",) * len(edges))


def union_rect_mesh(rects: Sequence[tuple[float, float, float, float, int, int]]) -> Mesh:
    """Merged crossed mesh over a union of axis-aligned rectangles.

    Rectangles are given as (x0, y0, x1, y1, nx, ny); grids must agree
    on shared edges, which is the caller's responsibility (vertices
    closer than 1e-9 are fused).
    """
    parts = [rect_mesh(*r) for r in rects]
    all_vertices = np.vstack([m.vertices for m in parts])
    keys = np.round(all_vertices / _MERGE_TOL).astype(np.int64)
    _, unique_idx, inverse = np.unique(keys, axis=0, return_index=True,
                                       return_inverse=True)
    vertices = all_vertices[unique_idx]
    triangles = []
    offset = 0
    for m in parts:
        triangles.append(inverse[m.triangles + offset])
        offset += m.num_vertices
    triangles = np.vstack(triangles).astype(np.int32)
    edges = _boundary_edges_oriented(triangles)
    return Mesh(vertices, triangles, edges, ("free",) * len(edges))


def tag_boundary(mesh: Mesh,
                 rules: Sequence[tuple[str, Callable[[float, float], bool]]]) -> Mesh:
    """Retag boundary edges by midpoint predicates; first match wins.

    Unmatched edges keep the tag "free".
    """
    mids = 0.5 * (mesh.vertices[mesh.boundary_edges[:, 0]]
                  + mesh.vertices[mesh.boundary_edges[:, 1]])
    tags = []
    for (mx, my) in mids:
        for tag, predicate in rules:
            if predicate(mx, my):
                tags.append(tag)
                break
        else:
            tags.append("free")
    return Mesh(mesh.vertices.copy(), mesh.triangles.copy(),
                mesh.boundary_edges.copy(), tuple(tags))


def write_mesh(path, mesh: Mesh) -> None:
    """ASCII mesh format: "NV NT NB", vertex lines "x y", triangle lines
    "v1 v2 v3", boundary lines "v1 v2 tag".  Vertex indices are 0-based;
    coordinates round-trip bit-exactly."""
    lines = [f"{mesh.num_vertices} {mesh.num_triangles} {len(mesh.boundary_edges)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles]
    lines += [f"{a} {b} {tag}" for (a, b), tag in
              zip(mesh.boundary_edges, mesh.boundary_tags)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    """Read the ASCII format written by :func:`write_mesh`."""
    text = Path(path).read_text().split("\n")
    rows = [line.split() for line in text if line.strip()]
    try:
        nv, nt, nb = (int(x) for x in rows[0])
        if len(rows) != 1 + nv + nt + nb:
            raise MeshFormatError(
                f"expected {1 + nv + nt + nb} lines, found {len(rows)}")
        vertices = np.array([[float(r[0]), float(r[1])]
                             for r in rows[1:1 + nv]])
        triangles = np.array([[int(r[0]), int(r[1]), int(r[2])]
                              for r in rows[1 + nv:1 + nv + nt]], dtype=np.int32)
        edge_rows = rows[1 + nv + nt:]
        edges = np.array([[int(r[0]), int(r[1])] for r in edge_rows],
                         dtype=np.int32).reshape(-1, 2)
        tags = tuple(r[2] for r in edge_rows)
    except (ValueError, IndexError) as exc:
        raise MeshFormatError(f"malformed mesh file {path}: {exc}") from exc
    return Mesh(vertices, triangles, edges, tags)
