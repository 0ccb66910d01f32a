"""Output writers: legacy VTK, indexed design images and run histories."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .fields import MaterialMap
from .mesh import Mesh
from .optimizer import IterationRecord

# One fixed palette entry per material; the first three match the usual
# strong/weak/void rendering, the background stays distinguishable.
PALETTE = [
    (0, 0, 0), (128, 128, 128), (255, 255, 255), (214, 39, 40),
    (31, 119, 180), (44, 160, 44), (255, 127, 14), (148, 103, 189),
    (140, 86, 75), (227, 119, 194), (23, 190, 207), (188, 189, 34),
]
BACKGROUND = (205, 220, 245)


def _vtk_field(fh, name: str, values: np.ndarray) -> None:
    values = np.asarray(values)
    if values.ndim == 1:
        kind = "int" if np.issubdtype(values.dtype, np.integer) else "double"
        fh.write(f"SCALARS {name} {kind} 1\nLOOKUP_TABLE default\n")
        for v in values:
            fh.write(f"{v:d}\n" if kind == "int" else f"{v:.12g}\n")
    elif values.shape[1] in (2, 3) and name in ("displacement", "velocity"):
        fh.write(f"VECTORS {name} double\n")
        for row in values:
            x, y = row[0], row[1]
            z = row[2] if len(row) > 2 else 0.0
            fh.write(f"{x:.12g} {y:.12g} {z:.12g}\n")
    else:
        fh.write(f"FIELD attributes 1\n{name} {values.shape[1]} "
                 f"{values.shape[0]} double\n")
        for row in values:
            fh.write(" ".join(f"{v:.12g}" for v in row) + "\n")


def write_vtk(path, mesh: Mesh, point_data: dict | None = None,
              cell_data: dict | None = None, title: str = "mmtop design") -> None:
    """Legacy ASCII VTK unstructured grid with point and cell data."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\n"
                 "DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.num_vertices} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.12g} {y:.12g} 0\n")
        fh.write(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {mesh.num_triangles}\n")
        fh.write("5\n" * mesh.num_triangles)
        if cell_data:
            fh.write(f"CELL_DATA {mesh.num_triangles}\n")
            for name, values in cell_data.items():
                _vtk_field(fh, name, values)
        if point_data:
            fh.write(f"POINT_DATA {mesh.num_vertices}\n")
            for name, values in point_data.items():
                _vtk_field(fh, name, values)


def rasterize_labels(mesh: Mesh, labels: np.ndarray,
                     width: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Sample element labels on a pixel grid over the mesh bounding box.

    Returns (label image, inside mask) with row 0 at the top; pixels
    outside the triangulation get label 0.
    """
    from matplotlib.tri import Triangulation

    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    span = hi - lo
    height = max(1, int(round(width * span[1] / span[0])))
    xs = lo[0] + (np.arange(width) + 0.5) * span[0] / width
    ys = lo[1] + (np.arange(height) + 0.5) * span[1] / height
    px, py = np.meshgrid(xs, ys[::-1])
    tri = Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1],
                        mesh.triangles)
    finder = tri.get_trifinder()
    idx = finder(px.ravel(), py.ravel()).reshape(height, width)
    inside = idx >= 0
    image = np.zeros((height, width), dtype=np.int32)
    image[inside] = np.asarray(labels)[idx[inside]]
    return image, inside


def write_design_image(path, mesh: Mesh, mm: MaterialMap,
                       width: int = 512) -> None:
    """Indexed PPM (color) or PGM (gray) snapshot of the material layout."""
    path = Path(path)
    image, inside = rasterize_labels(mesh, mm.labels, width)
    height, w = image.shape
    if path.suffix.lower() == ".pgm":
        levels = np.linspace(0, 255, mm.M).astype(np.uint8)
        gray = np.full((height, w), 64, dtype=np.uint8)
        gray[inside] = levels[image[inside] - 1]
        header = f"P5\n{w} {height}\n255\n".encode()
        path.write_bytes(header + gray.tobytes())
    else:
        rgb = np.empty((height, w, 3), dtype=np.uint8)
        rgb[:] = BACKGROUND
        for label in range(1, mm.M + 1):
            rgb[image == label] = PALETTE[(label - 1) % len(PALETTE)]
        header = f"P6\n{w} {height}\n255\n".encode()
        path.write_bytes(header + rgb.tobytes())


def write_history(path, history: list[IterationRecord], M: int) -> None:
    """CSV history: iter, objective, compliance, theta, kappa, volumes."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "objective", "compliance", "theta_deg",
                         "kappa"] + [f"vol_{i}" for i in range(1, M + 1)])
        for rec in history:
            writer.writerow([rec.iteration, repr(rec.objective),
                             repr(rec.compliance), repr(rec.theta_deg),
                             repr(rec.kappa)]
                            + [repr(v) for v in rec.volumes])
