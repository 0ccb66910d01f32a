"""Multi-material level-set topology optimization driven by topological
derivatives.

A design with M materials is a vector level-set field into R^(M-1); the
image space is split into M convex sector cones, one per material.  The
optimizer remaps per-element topological derivative vectors through the
inverse sector-normal matrices and rotates the field toward the result
on the unit sphere of the discrete L2 space until the two align.
"""

from ._kernels import backend_name
from .errors import (AntipodalFieldError, DegenerateFieldError,
                     DegenerateMaterialPairError, MeshFormatError, MmtopError,
                     RigidBodyModeError, SectorConstructionError,
                     StationaryFieldError)
from .fields import (MaterialMap, VectorLevelSet, classify_elements,
                     constant_field, filter_to_nodes, l2_inner, l2_norm,
                     material_volumes, normalize)
from .gtd import TDField, assemble_g_field, check_local_optimality, map_to_g
from .mesh import Mesh, read_mesh, rect_mesh, tag_boundary, union_rect_mesh, write_mesh
from .optimizer import (IterationRecord, OptimizerConfig, ProblemState,
                        RunResult, compute_angle, initial_design, run,
                        sphere_step)
from .sectors import (SectorStructure, classify, classify_points,
                      create_sector_structure, get_normal, is_in_sector)

__version__ = "0.1.0"

__all__ = [
    "AntipodalFieldError", "DegenerateFieldError",
    "DegenerateMaterialPairError", "IterationRecord", "MaterialMap",
    "Mesh", "MeshFormatError", "MmtopError", "OptimizerConfig",
    "ProblemState", "RigidBodyModeError", "RunResult",
    "SectorConstructionError", "SectorStructure", "StationaryFieldError",
    "TDField", "VectorLevelSet", "assemble_g_field", "backend_name",
    "check_local_optimality", "classify", "classify_elements",
    "classify_points", "compute_angle", "constant_field",
    "create_sector_structure", "filter_to_nodes", "get_normal",
    "initial_design", "is_in_sector", "l2_inner", "l2_norm", "map_to_g",
    "material_volumes", "normalize", "read_mesh", "rect_mesh", "run",
    "sphere_step", "tag_boundary", "union_rect_mesh", "write_mesh",
]
