"""Command-line front end: sector tables, mesh generation and runs.

Heavy numerical imports stay inside the subcommand handlers so that the
MMTOP_THREADS cap can be applied to the BLAS/OpenMP pools before NumPy
loads.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}

# Config keys: parser plus per-problem defaults filled in _apply_defaults.
_CONFIG_TYPES = {
    "problem": str,
    "nx": int,
    "ny": int,
    "E1": float, "E2": float, "E3": float,
    "nu1": float, "nu2": float, "nu3": float,
    "l1": float, "l2": float,
    "kappa_max": float,
    "eps_theta_deg": float,
    "max_iter": int,
    "max_halvings": int,
    "filter_depth": int,
    "line_search": bool,
    "initial_material": int,
    "snapshot_stride": int,
    "output_dir": str,
    "image_width": int,
    "mesh_file": str,
    "gx": float, "gy": float,
}

_PROBLEM_DEFAULTS = {
    "academic8": dict(nx=128, ny=128, kappa_max=0.5, eps_theta_deg=1e-3,
                      max_iter=200, filter_depth=0, line_search=False,
                      initial_material=8),
    "cantilever": dict(nx=60, ny=30, kappa_max=0.12, eps_theta_deg=0.5,
                       max_iter=200, filter_depth=3, line_search=True,
                       initial_material=1),
    "bridge": dict(nx=80, ny=60, kappa_max=0.2, eps_theta_deg=0.5,
                   max_iter=200, filter_depth=3, line_search=True,
                   initial_material=1),
    "mast": dict(nx=20, ny=30, kappa_max=0.1, eps_theta_deg=0.5,
                 max_iter=200, filter_depth=3, line_search=True,
                 initial_material=1),
    "custom": dict(kappa_max=0.1, eps_theta_deg=0.5, max_iter=200,
                   filter_depth=3, line_search=True, initial_material=1,
                   gx=0.0, gy=-1.0),
}

_COMMON_DEFAULTS = dict(max_halvings=15, snapshot_stride=25,
                        output_dir="out", image_width=512,
                        E1=1.0, E2=0.5, E3=1e-4,
                        nu1=0.3333, nu2=0.3333, nu3=0.3333e-4,
                        l1=2.0, l2=0.5)


class ConfigError(Exception):
    pass


def _apply_thread_cap() -> None:
    raw = os.environ.get("MMTOP_THREADS", "").strip()
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        print(f"warning: ignoring non-integer MMTOP_THREADS={raw!r}",
              file=sys.stderr)
        return
    if n > 0:
        for var in _THREAD_VARS:
            os.environ[var] = str(n)


def parse_config(path) -> dict:
    """Flat key=value file with '#' comments."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        kind = _CONFIG_TYPES[key]
        try:
            if kind is bool:
                low = raw.lower()
                if low in _BOOL_TRUE:
                    values[key] = True
                elif low in _BOOL_FALSE:
                    values[key] = False
                else:
                    raise ValueError(f"not a boolean: {raw!r}")
            else:
                values[key] = kind(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    if "problem" not in values:
        raise ConfigError(f"{path}: missing required key 'problem'")
    if values["problem"] not in _PROBLEM_DEFAULTS:
        raise ConfigError(
            f"{path}: unknown problem {values['problem']!r}; choose from "
            f"{sorted(_PROBLEM_DEFAULTS)}")
    return values


def _apply_defaults(values: dict) -> dict:
    cfg = dict(_COMMON_DEFAULTS)
    cfg.update(_PROBLEM_DEFAULTS[values["problem"]])
    cfg.update(values)
    if cfg.get("nx", 2) < 2 or cfg.get("ny", 2) < 2:
        raise ConfigError("mesh resolutions must be at least 2")
    if cfg["snapshot_stride"] < 1:
        raise ConfigError("snapshot_stride must be at least 1")
    return cfg


def _materials_from_config(cfg: dict):
    from .elasticity import ElasticMaterial

    strong = ElasticMaterial(E=cfg["E1"], nu=cfg["nu1"], ell=cfg["l1"])
    weak = ElasticMaterial(E=cfg["E2"], nu=cfg["nu2"], ell=cfg["l2"])
    void = ElasticMaterial(E=cfg["E3"], nu=cfg["nu3"], ell=0.0,
                           lam=1e-4 * (strong.lam + weak.lam),
                           mu=1e-4 * (strong.mu + weak.mu))
    return strong, weak, void


def _build_problem(cfg: dict):
    from . import academic, elasticity
    from .sectors import create_sector_structure

    name = cfg["problem"]
    if name == "academic8":
        from .mesh import rect_mesh

        spec = academic.AcademicSpec.default()
        mesh = rect_mesh(0.0, 0.0, 1.0, 1.0, cfg["nx"], cfg["ny"])
        sectors = create_sector_structure(spec.M)
        return academic.AcademicProblem(spec, mesh, sectors)
    materials = _materials_from_config(cfg)
    if name == "cantilever":
        return elasticity.cantilever_problem(cfg["nx"], cfg["ny"], materials)
    if name == "bridge":
        return elasticity.bridge_problem(cfg["nx"], cfg["ny"], materials)
    if name == "mast":
        try:
            return elasticity.mast_problem(cfg["nx"], cfg["ny"], materials)
        except ValueError as exc:
            raise ConfigError(str(exc))
    if name == "custom":
        from .elasticity import BoundaryConditions, ElasticityProblem
        from .mesh import read_mesh

        if "mesh_file" not in cfg:
            raise ConfigError("custom problem requires mesh_file")
        mesh = read_mesh(cfg["mesh_file"])
        bc = BoundaryConditions(dirichlet={"dirichlet": (True, True)},
                                neumann={"neumann": (cfg["gx"], cfg["gy"])})
        return ElasticityProblem(mesh, materials, bc, name="custom")
    raise ConfigError(f"unknown problem {name!r}")


def cmd_sectors(args) -> int:
    if not 2 <= args.M <= 64:
        print(f"error: M must lie in 2..64, got {args.M}", file=sys.stderr)
        return EXIT_USAGE
    from .sectors import create_sector_structure, get_normal

    S = create_sector_structure(args.M)
    print(f"M = {args.M}")
    print(f"{'i':>3} {'j':>3}   n^(i->j)")
    for i in range(1, args.M + 1):
        for j in range(i + 1, args.M + 1):
            entries = ", ".join(f"{v: .12f}" for v in get_normal(S, i, j))
            print(f"{i:>3} {j:>3}   ({entries})")
    return EXIT_OK


def cmd_mesh(args) -> int:
    from .mesh import rect_mesh, tag_boundary, union_rect_mesh, write_mesh

    try:
        if args.problem is not None:
            from . import elasticity

            builders = {"cantilever": elasticity.cantilever_problem,
                        "bridge": elasticity.bridge_problem,
                        "mast": elasticity.mast_problem}
            if args.problem == "academic8":
                mesh = rect_mesh(0.0, 0.0, 1.0, 1.0, args.nx, args.ny)
            elif args.problem in builders:
                mesh = builders[args.problem](args.nx, args.ny).mesh
            else:
                print(f"error: unknown problem {args.problem!r}",
                      file=sys.stderr)
                return EXIT_USAGE
        elif args.rect:
            rects = []
            for spec in args.rect:
                parts = spec.split(",")
                if len(parts) != 4:
                    print(f"error: --rect wants x0,y0,x1,y1, got {spec!r}",
                          file=sys.stderr)
                    return EXIT_USAGE
                x0, y0, x1, y1 = (float(p) for p in parts)
                rects.append((x0, y0, x1, y1, args.nx, args.ny))
            mesh = (rect_mesh(*rects[0]) if len(rects) == 1
                    else union_rect_mesh(rects))
            mesh = tag_boundary(mesh, [("boundary", lambda x, y: True)])
        else:
            print("error: give either --problem or --rect", file=sys.stderr)
            return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_mesh(args.output, mesh)
    print(f"wrote {mesh.num_vertices} vertices, {mesh.num_triangles} "
          f"triangles to {args.output}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = _apply_defaults(parse_config(args.config))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    from .errors import MmtopError

    try:
        problem = _build_problem(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MmtopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    from .export import write_design_image, write_history, write_vtk
    from .optimizer import OptimizerConfig, initial_design, run

    outdir = Path(args.output or cfg["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    opt = OptimizerConfig(eps_theta_deg=cfg["eps_theta_deg"],
                          kappa_max=cfg["kappa_max"],
                          max_iter=cfg["max_iter"],
                          max_halvings=cfg["max_halvings"],
                          filter_depth=cfg["filter_depth"],
                          line_search=cfg["line_search"])
    psi0 = initial_design(problem.mesh, problem.sectors,
                          cfg["initial_material"])

    stride = cfg["snapshot_stride"]

    def snapshot(k, psi, mm, record, g):
        if k % stride == 0:
            write_vtk(outdir / f"design_{k:04d}.vtk", problem.mesh,
                      point_data={"psi": psi.values, "gtd": g},
                      cell_data={"material": mm.labels})

    try:
        result = run(problem, psi0, opt, on_iteration=snapshot)
    except MmtopError as exc:
        print(f"error: optimization failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    write_history(outdir / "history.csv", result.history, problem.sectors.M)
    write_vtk(outdir / "design_final.vtk", problem.mesh,
              point_data={"psi": result.psi.values},
              cell_data={"material": result.material_map.labels})
    write_design_image(outdir / "design_final.ppm", problem.mesh,
                       result.material_map, width=cfg["image_width"])
    final = result.history[-1]
    print(f"{result.status}, {final.iteration}, {final.objective:.6g}, "
          f"{final.theta_deg:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmtop",
        description="Multi-material level-set topology optimization driven "
                    "by topological derivatives")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sec = sub.add_parser("sectors", help="print the sector normal table")
    p_sec.add_argument("M", type=int, help="number of materials (2..64)")
    p_sec.set_defaults(func=cmd_sectors)

    p_mesh = sub.add_parser("mesh", help="generate a structured crossed mesh")
    p_mesh.add_argument("--problem", choices=["academic8", "cantilever",
                                              "bridge", "mast"])
    p_mesh.add_argument("--rect", action="append",
                        help="x0,y0,x1,y1 (repeatable for unions)")
    p_mesh.add_argument("--nx", type=int, default=32)
    p_mesh.add_argument("--ny", type=int, default=32)
    p_mesh.add_argument("-o", "--output", required=True)
    p_mesh.set_defaults(func=cmd_mesh)

    p_run = sub.add_parser("run", help="run a configured optimization")
    p_run.add_argument("config", help="key=value configuration file")
    p_run.add_argument("-o", "--output", default=None,
                       help="output directory (overrides config)")
    p_run.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
