"""Fixed-point iteration on the unit sphere of the discrete L2 space.

Each step measures the angle between the level-set field and the
normalized generalized derivative field, then moves along the great
circle connecting them (spherical interpolation).  With the line search
active, the step fraction is halved until the objective strictly
decreases; material swaps along the way are monitored against the sign
of the corresponding derivative component.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .errors import AntipodalFieldError, StationaryFieldError
from .fields import (MaterialMap, VectorLevelSet, classify_elements, l2_inner,
                     l2_norm, material_volumes, normalize)
from .gtd import TDField, assemble_g_field
from .mesh import Mesh
from .sectors import SectorStructure

logger = logging.getLogger(__name__)


@dataclass
class OptimizerConfig:
    eps_theta_deg: float = 0.5
    kappa_max: float = 1.0
    max_iter: int = 500
    max_halvings: int = 15
    filter_depth: int = 3
    line_search: bool = True

    def __post_init__(self):
        if not 0.0 < self.kappa_max <= 1.0:
            raise ValueError("kappa_max must lie in (0, 1]")
        if self.eps_theta_deg <= 0.0:
            raise ValueError("stopping angle must be positive")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    compliance: float
    theta_deg: float
    kappa: float
    volumes: tuple[float, ...]
    design_changed: bool = False


@dataclass
class ProblemState:
    """Objective value and optional PDE state for one design."""

    objective: float
    compliance: float = 0.0
    aux: Any = None


class Problem(Protocol):
    mesh: Mesh
    sectors: SectorStructure

    def evaluate(self, mm: MaterialMap) -> ProblemState: ...

    def td_field(self, mm: MaterialMap, state: ProblemState) -> TDField: ...


@dataclass
class SwitchStats:
    """Material swaps between accepted designs vs. derivative signs."""

    total: int = 0
    negative: int = 0
    violations: list = field(default_factory=list)

    @property
    def fraction_negative(self) -> float:
        return 1.0 if self.total == 0 else self.negative / self.total


@dataclass
class RunResult:
    psi: VectorLevelSet
    history: list[IterationRecord]
    status: str
    material_map: MaterialMap
    max_norm_drift: float
    switches: SwitchStats


STATUS_CONVERGED = "Converged"
STATUS_MAX_ITER = "MaxIter"
STATUS_NO_DESCENT = "NoDescent"


def compute_angle(mesh: Mesh, psi: VectorLevelSet, g: np.ndarray) -> float:
    """Angle in degrees between psi and the derivative field.

    Zero means the local optimality condition holds on the discrete
    level; the field g is normalized internally.
    """
    g_field = VectorLevelSet(np.asarray(g, dtype=np.float64), psi.M)
    g_norm = l2_norm(mesh, g_field)
    if g_norm == 0.0:
        raise StationaryFieldError("derivative field vanishes identically")
    cos_theta = l2_inner(mesh, psi, g_field) / g_norm
    return math.degrees(math.acos(min(1.0, max(-1.0, cos_theta))))


def sphere_step(mesh: Mesh, psi: VectorLevelSet, g: np.ndarray,
                kappa: float, theta_deg: float) -> VectorLevelSet:
    """Spherical interpolation from psi toward the normalized g.

    kappa = 1 lands on g/||g||, kappa -> 0 stays at psi.  The result is
    renormalized defensively; the drift is at rounding level.
    """
    if theta_deg == 0.0 or kappa == 0.0:
        return psi
    if theta_deg >= 180.0:
        raise AntipodalFieldError(
            "update direction undefined for antipodal fields (theta = 180 deg)")
    g_field = VectorLevelSet(np.asarray(g, dtype=np.float64), psi.M)
    g_hat = normalize(mesh, g_field)
    theta = math.radians(theta_deg)
    new_values = (math.sin((1.0 - kappa) * theta) * psi.values
                  + math.sin(kappa * theta) * g_hat.values) / math.sin(theta)
    return normalize(mesh, VectorLevelSet(new_values, psi.M))


def initial_design(mesh: Mesh, S: SectorStructure, material: int) -> VectorLevelSet:
    """Unit-norm constant field inside the sector of the given material.

    The direction is the normalized sum of the sector's generating
    anchor points, a deterministic interior point of the cone.
    """
    if not 1 <= material <= S.M:
        raise ValueError(f"material must lie in 1..{S.M}, got {material}")
    keep = [k for k in range(S.M) if k != material - 1]
    direction = S.anchors[keep].sum(axis=0)
    direction = direction / np.linalg.norm(direction)
    values = np.tile(direction, (mesh.num_vertices, 1))
    return normalize(mesh, VectorLevelSet(values, S.M))


def _track_switches(stats: SwitchStats, iteration: int, td: TDField,
                    old_labels: np.ndarray, new_labels: np.ndarray) -> None:
    changed = np.nonzero(old_labels != new_labels)[0]
    for e in changed:
        i, j = int(old_labels[e]), int(new_labels[e])
        value = float(td.values[e, td.component_index(i, j)])
        stats.total += 1
        if value < 0.0:
            stats.negative += 1
        else:
            stats.violations.append((iteration, int(e), i, j, value))
            logger.debug("switch %d->%d in element %d at iteration %d had "
                         "nonnegative derivative %.3e", i, j, e, iteration, value)


def run(problem: Problem, psi0: VectorLevelSet, config: OptimizerConfig,
        on_iteration: Callable[[int, VectorLevelSet, MaterialMap,
                                IterationRecord, np.ndarray], None] | None = None,
        ) -> RunResult:
    """Drive the angle between the design and its derivative field to zero.

    Per iteration: evaluate derivatives, assemble the nodal field,
    measure the angle, stop below the threshold, otherwise search the
    step fractions kappa_max * {1, 1/2, 1/4, ...} for strict descent
    (or take the fixed fraction when the line search is disabled).
    Because volume fractions are quantized by the classification
    sampling, trial steps can leave the design bit-identical; such
    steps are accepted as drift at constant objective (the search stops
    there since smaller rotations cannot flip more).  A step that
    changes the design is accepted only on strict descent.  History
    rows carry the state at the start of each iteration plus the
    accepted step fraction.
    """
    mesh, S = problem.mesh, problem.sectors
    psi = normalize(mesh, psi0)
    mm = classify_elements(mesh, psi, S, config.filter_depth)
    state = problem.evaluate(mm)

    history: list[IterationRecord] = []
    switches = SwitchStats()
    max_drift = abs(l2_norm(mesh, psi) - 1.0)
    status = STATUS_MAX_ITER

    for k in range(config.max_iter + 1):
        td = problem.td_field(mm, state)
        g = assemble_g_field(S, td, mesh)
        theta = compute_angle(mesh, psi, g)
        record = IterationRecord(
            iteration=k, objective=state.objective, compliance=state.compliance,
            theta_deg=theta, kappa=0.0,
            volumes=tuple(material_volumes(mesh, mm)))
        history.append(record)
        if on_iteration is not None:
            on_iteration(k, psi, mm, record, g)

        if theta < config.eps_theta_deg:
            status = STATUS_CONVERGED
            break
        if k == config.max_iter:
            status = STATUS_MAX_ITER
            break

        accepted = None
        if config.line_search:
            for halving in range(config.max_halvings + 1):
                kappa = config.kappa_max * 0.5 ** halving
                trial_psi = sphere_step(mesh, psi, g, kappa, theta)
                trial_mm = classify_elements(mesh, trial_psi, S,
                                             config.filter_depth)
                if np.array_equal(trial_mm.fractions, mm.fractions):
                    # The rotation crossed no classification boundary, so
                    # the objective is exactly unchanged, and any smaller
                    # step flips a subset of nothing: accept the drift
                    # (moves the field toward alignment at constant J).
                    accepted = (kappa, trial_psi, trial_mm, state, False)
                    break
                trial_state = problem.evaluate(trial_mm)
                if trial_state.objective < state.objective:
                    accepted = (kappa, trial_psi, trial_mm, trial_state, True)
                    break
            if accepted is None:
                status = STATUS_NO_DESCENT
                logger.info("no descent after %d halvings at iteration %d "
                            "(theta %.4f deg)", config.max_halvings, k, theta)
                break
        else:
            kappa = config.kappa_max
            trial_psi = sphere_step(mesh, psi, g, kappa, theta)
            trial_mm = classify_elements(mesh, trial_psi, S, config.filter_depth)
            trial_state = problem.evaluate(trial_mm)
            changed = not np.array_equal(trial_mm.fractions, mm.fractions)
            accepted = (kappa, trial_psi, trial_mm, trial_state, changed)

        kappa, psi, new_mm, state, changed = accepted
        record.kappa = kappa
        record.design_changed = changed
        _track_switches(switches, k, td, mm.labels, new_mm.labels)
        mm = new_mm
        max_drift = max(max_drift, abs(l2_norm(mesh, psi) - 1.0))

    return RunResult(psi=psi, history=history, status=status,
                     material_map=mm, max_norm_drift=max_drift,
                     switches=switches)
