"""Config-driven command line: single runs, width sweeps, self-checks.

Configs are YAML trees with fixed sections (geometry, scaling, materials,
solver, initial, bcs, output).  Unknown keys anywhere are rejected, and
every missing required key is reported in one pass.  Exit codes: 0 on
success, 2 for config problems, 3 when a solve fails or a check does not
pass.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time as _time
from dataclasses import dataclass

import numpy as np
import yaml

from . import __version__
from .constitutive import LinearModel, VanGenuchtenModel, VanGenuchtenParams
from .effective import EffectiveVariant, _reduced, run_effective, select_variant
from .fullmodel import (
    BoundaryCondition,
    Discretization,
    SimulationConfig,
    StepFailureError,
    run_simulation,
)
from .mesh import (
    EDGE_NAMES,
    SUBDOMAIN_NAMES,
    ScalingRegime,
    UnsupportedRegimeError,
)
from .report import (
    save_interface_profiles,
    save_sweep_plot,
    snapshot_outputs,
    write_interface_csv,
    write_interface_steps_csv,
    write_steps_csv,
)
from .upscale import epsilon_sweep, table_to_csv, write_plot_series

CONFIG_ERROR = 2
SOLVER_ERROR = 3


class ConfigError(ValueError):
    """All config problems found in one parse, newline-separated."""


_SECTIONS = {
    "geometry": {"nx", "ny", "matrix_width", "fracture_nx"},
    "scaling": {"porosity_exp", "conductivity_exp", "epsilons",
                "storage_ratio", "conductivity_ratio"},
    "materials": {"matrix", "fracture"},
    "solver": {"end_time", "dt", "picard_tol", "picard_max_iters",
               "linear_tol", "linear_solver"},
    "initial": {"head", "source"},
    "bcs": None,                      # sub.edge keys plus fracture_ends
    "output": {"snapshot_times"},
}
_REQUIRED = (("solver", "end_time"), ("solver", "dt"),
             ("materials", "matrix"), ("materials", "fracture"),
             ("scaling", "epsilons"), ("initial", "head"))
_VG_KEYS = {"alpha", "n", "theta_S", "theta_R", "K_S"}
_LINEAR_KEYS = {"slope", "intercept", "conductivity"}


@dataclass
class RunSpec:
    """Parsed config plus the sweep and output settings around it."""

    config: SimulationConfig
    epsilons: list
    snapshot_times: list
    source_path: str


def _material(tree, where, errors):
    if not isinstance(tree, dict):
        errors.append(f"{where}: expected a mapping with a 'model' key")
        return None
    model = tree.get("model")
    rest = {k: v for k, v in tree.items() if k != "model"}
    try:
        if model == "van-genuchten":
            unknown = set(rest) - _VG_KEYS
            if unknown:
                raise ValueError(f"unknown keys {sorted(unknown)}")
            return VanGenuchtenModel(VanGenuchtenParams(**rest))
        if model == "linear":
            unknown = set(rest) - _LINEAR_KEYS
            if unknown:
                raise ValueError(f"unknown keys {sorted(unknown)}")
            return LinearModel(**rest)
        raise ValueError(f"unknown material model {model!r}")
    except TypeError as exc:
        errors.append(f"{where}: {exc}")
    except ValueError as exc:
        errors.append(f"{where}: {exc}")
    return None


def _boundaries(tree, errors):
    boundary = {}
    ends = "dirichlet"
    for key, val in tree.items():
        if key == "fracture_ends":
            ends = val
            continue
        parts = str(key).split(".")
        if len(parts) != 2 or parts[0] not in SUBDOMAIN_NAMES \
                or parts[1] not in EDGE_NAMES:
            errors.append(f"bcs: unknown location {key!r} "
                          "(expected subdomain.edge)")
            continue
        if not isinstance(val, dict) or set(val) - {"kind", "value",
                                                    "segment"}:
            errors.append(f"bcs {key}: expected kind/value/segment mapping")
            continue
        try:
            seg = val.get("segment")
            boundary[(parts[0], parts[1])] = BoundaryCondition(
                val.get("kind", ""), float(val.get("value", 0.0)),
                segment=None if seg is None else tuple(float(s)
                                                       for s in seg))
        except (TypeError, ValueError) as exc:
            errors.append(f"bcs {key}: {exc}")
    return boundary, ends


def parse_config(path) -> RunSpec:
    """Read, validate, and materialize a config file.

    Raises ConfigError listing every missing or unknown key found, and
    flags an uncovered scaling regime before any solve starts.
    """
    with open(path) as fh:
        try:
            tree = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if tree is None:
        tree = {}
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    errors = []
    unknown = set(tree) - set(_SECTIONS)
    if unknown:
        errors.append(f"unknown sections {sorted(unknown)}")
    for name, allowed in _SECTIONS.items():
        section = tree.get(name, {})
        if not isinstance(section, dict):
            errors.append(f"section {name}: expected a mapping")
            tree[name] = {}
            continue
        if allowed is not None:
            extra = set(section) - allowed
            if extra:
                errors.append(f"section {name}: unknown keys "
                              f"{sorted(extra)}")
    missing = [f"{sec}.{key}" for sec, key in _REQUIRED
               if key not in tree.get(sec, {})]
    if missing:
        errors.append(f"missing required keys: {', '.join(missing)}")
    if errors:
        raise ConfigError("\n".join(errors))

    geometry = tree.get("geometry", {})
    scaling = tree.get("scaling", {})
    solver = tree.get("solver", {})
    initial = tree.get("initial", {})
    output = tree.get("output", {})

    matrix = _material(tree["materials"]["matrix"], "materials.matrix",
                       errors)
    fracture = _material(tree["materials"]["fracture"], "materials.fracture",
                         errors)
    boundary, ends = _boundaries(tree.get("bcs", {}), errors)

    epsilons = [float(e) for e in scaling["epsilons"]]
    if not epsilons:
        errors.append("scaling.epsilons: empty list")
    if errors:
        raise ConfigError("\n".join(errors))

    regime = ScalingRegime(
        width_ratio=max(epsilons),
        porosity_exp=float(scaling.get("porosity_exp", -1.0)),
        conductivity_exp=float(scaling.get("conductivity_exp", -1.0)))
    try:
        select_variant(regime)      # uncovered regimes fail at parse time
    except UnsupportedRegimeError as exc:
        raise ConfigError(str(exc)) from exc

    config = SimulationConfig(
        regime=regime, matrix_material=matrix, fracture_material=fracture,
        end_time=float(solver["end_time"]), dt=float(solver["dt"]),
        nx=int(geometry.get("nx", 160)), ny=int(geometry.get("ny", 160)),
        fracture_nx=(None if geometry.get("fracture_nx") is None
                     else int(geometry["fracture_nx"])),
        matrix_width=float(geometry.get("matrix_width", 1.0)),
        picard_tol=float(solver.get("picard_tol", 1e-5)),
        picard_max_iters=int(solver.get("picard_max_iters", 100)),
        linear_tol=float(solver.get("linear_tol", 1e-12)),
        linear_solver=str(solver.get("linear_solver", "direct")),
        boundary=boundary, initial_head=initial["head"],
        source=initial.get("source", 0.0),
        storage_ratio=scaling.get("storage_ratio"),
        conductivity_ratio=scaling.get("conductivity_ratio"),
        fracture_ends=ends)
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    times = [float(t) for t in output.get("snapshot_times",
                                          [config.end_time])]
    return RunSpec(config=config, epsilons=epsilons, snapshot_times=times,
                   source_path=str(path))


# -- manifest -----------------------------------------------------------------


def _material_echo(mat):
    if isinstance(mat, VanGenuchtenModel):
        d = dataclasses.asdict(mat.params)
        d["model"] = "van-genuchten"
        return d
    if isinstance(mat, LinearModel):
        return {"model": "linear", "slope": mat.slope,
                "intercept": mat.intercept,
                "conductivity": mat.conductivity}
    return {"model": type(mat).__name__}


def config_echo(config: SimulationConfig) -> dict:
    """Every field the solver consumed, defaults materialized."""
    echo = {}
    for f in dataclasses.fields(config):
        val = getattr(config, f.name)
        if f.name == "regime":
            echo[f.name] = dataclasses.asdict(val)
        elif f.name in ("matrix_material", "fracture_material"):
            echo[f.name] = _material_echo(val)
        elif f.name == "boundary":
            echo[f.name] = {
                f"{sub}.{edge}": {"kind": bc.kind, "value": bc.value,
                                  "segment": bc.segment}
                for (sub, edge), bc in val.items()}
        elif f.name == "scales":
            echo[f.name] = None if val is None else dataclasses.asdict(val)
        else:
            echo[f.name] = val
    return echo


def write_manifest(out_dir, command, spec, config, outputs, wall_time,
                   extra=None) -> str:
    with open(spec.source_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "input": spec.source_path,
        "input_sha256": digest,
        "epsilons": spec.epsilons,
        "snapshot_times": spec.snapshot_times,
        "config": config_echo(config),
        "outputs": [os.path.basename(p) for p in outputs],
        "timing": {"wall_time": wall_time},
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _fail(out_dir, exc, outputs) -> int:
    path = os.path.join(out_dir, "error.txt")
    with open(path, "w") as fh:
        fh.write(f"{type(exc).__name__}: {exc}\n")
    outputs.append(path)
    print(f"solver failure: {exc}", file=sys.stderr)
    return SOLVER_ERROR


# -- commands ------------------------------------------------------------------


def cmd_run(args) -> int:
    spec = parse_config(args.config)
    os.makedirs(args.output_dir, exist_ok=True)
    times = args.snapshot_times if args.snapshot_times is not None \
        else spec.snapshot_times
    outputs = []
    start = _time.perf_counter()
    try:
        if args.model == "epsilon":
            eps = args.epsilon if args.epsilon is not None \
                else spec.epsilons[0]
            r = spec.config.regime
            config = dataclasses.replace(
                spec.config,
                regime=ScalingRegime(width_ratio=eps,
                                     porosity_exp=r.porosity_exp,
                                     conductivity_exp=r.conductivity_exp))
            disc = Discretization(config)
            series = run_simulation(config, disc=disc)
            grid = disc.grid
            outputs.append(write_steps_csv(
                series, os.path.join(args.output_dir, "steps.csv")))
            outputs.extend(snapshot_outputs(series, grid, times,
                                            args.output_dir))
            extra = {"model": "epsilon", "epsilon": eps,
                     "iterations_total": sum(rr.iterations
                                             for rr in series.reports)}
        else:
            config = _reduced(spec.config)
            series, iface = run_effective(config)
            grid = Discretization(config, include_gamma=True).grid
            outputs.append(write_steps_csv(
                series, os.path.join(args.output_dir, "steps.csv")))
            outputs.extend(snapshot_outputs(series, grid, times,
                                            args.output_dir))
            node_y = grid.interface_y
            outputs.append(write_interface_csv(
                iface.fields, os.path.join(args.output_dir,
                                           "interface.csv"),
                node_y=node_y))
            outputs.append(write_interface_steps_csv(
                iface.reports, os.path.join(args.output_dir,
                                            "interface_steps.csv")))
            outputs.append(save_interface_profiles(
                iface.fields, node_y,
                os.path.join(args.output_dir, "interface_profiles.png")))
            variant = select_variant(config.regime)
            extra = {"model": "effective", "variant": variant.value,
                     "iterations_total": sum(rr.iterations
                                             for rr in series.reports)}
    except StepFailureError as exc:
        code = _fail(args.output_dir, exc, outputs)
        write_manifest(args.output_dir, "run", spec, spec.config, outputs,
                       _time.perf_counter() - start,
                       extra={"failure": str(exc)})
        return code
    wall = _time.perf_counter() - start
    outputs.append(write_manifest(args.output_dir, "run", spec, config,
                                  outputs, wall, extra=extra))
    print(f"run complete: {len(series.reports)} steps, "
          f"{extra['iterations_total']} iterations, "
          f"outputs in {args.output_dir}")
    return 0


def cmd_sweep(args) -> int:
    spec = parse_config(args.config)
    os.makedirs(args.output_dir, exist_ok=True)
    outputs = []
    start = _time.perf_counter()
    try:
        table = epsilon_sweep(spec.config, spec.epsilons, jobs=args.jobs)
    except StepFailureError as exc:
        code = _fail(args.output_dir, exc, outputs)
        write_manifest(args.output_dir, "sweep", spec, spec.config, outputs,
                       _time.perf_counter() - start,
                       extra={"failure": str(exc)})
        return code
    csv_path = os.path.join(args.output_dir, "sweep.csv")
    with open(csv_path, "w") as fh:
        fh.write(table_to_csv(table))
    outputs.append(csv_path)
    outputs.extend(write_plot_series(table, args.output_dir))
    outputs.append(save_sweep_plot(
        table, os.path.join(args.output_dir, "sweep_errors.png")))
    wall = _time.perf_counter() - start
    failures = [r for r in table.rows if r.failure is not None]
    outputs.append(write_manifest(
        args.output_dir, "sweep", spec, spec.config, outputs, wall,
        extra={"variant": table.variant.value,
               "row_failures": [r.failure for r in failures]}))
    for r in table.rows:
        mark = "FAILED " + r.failure if r.failure else (
            f"err_f={r.err_fracture:.3e} err_m1={r.err_m1:.3e} "
            f"err_m2={r.err_m2:.3e}")
        print(f"width {r.epsilon:g}: {mark}")
    return SOLVER_ERROR if failures else 0


def _check_lines(spec) -> list:
    """(name, passed, detail) rows for the config's invariant spot-checks."""
    config = spec.config
    rows = []
    variant = select_variant(config.regime)
    rows.append(("regime", True, f"limit model: {variant.value}"))

    for label in ("matrix_material", "fracture_material"):
        mat = getattr(config, label)
        if not isinstance(mat, VanGenuchtenModel):
            continue
        psi = np.linspace(-40.0, 5.0, 400)
        u = mat.kirchhoff(psi)
        gap = float(np.max(np.abs(mat.kirchhoff(mat.kirchhoff_inv(u)) - u)))
        rows.append((f"{label} transform round trip", gap <= 1e-9,
                     f"max residual {gap:.2e}"))

    small = dataclasses.replace(
        config, nx=min(config.nx, 16), ny=min(config.ny, 16),
        fracture_nx=None, end_time=2 * config.dt)
    try:
        series = run_simulation(small)
        worst = max(r.balance.relative for r in series.reports)
        rows.append(("resolved-model mass balance", worst <= 1e-8,
                     f"worst relative {worst:.2e}"))
    except (StepFailureError, ValueError) as exc:
        rows.append(("resolved-model mass balance", False, str(exc)))
    try:
        eseries, eface = run_effective(small)
        worst = max(r.balance.relative for r in eseries.reports)
        rows.append(("limit-model mass balance", worst <= 1e-8,
                     f"worst relative {worst:.2e}"))
        budget = [r for r in eface.reports
                  if r.constraint_residual is not None
                  or r.budget_residual is not None]
        if budget:
            worst = max((r.constraint_residual or 0.0)
                        + (r.budget_residual or 0.0) for r in budget)
            rows.append(("interface budget", worst <= 10 * config.picard_tol,
                         f"worst {worst:.2e}"))
    except (StepFailureError, ValueError) as exc:
        rows.append(("limit-model mass balance", False, str(exc)))
    return rows


def cmd_check(args) -> int:
    spec = parse_config(args.config)
    rows = _check_lines(spec)
    failed = False
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed = failed or not ok
    return SOLVER_ERROR if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracflow",
        description="Finite-volume unsaturated flow with a thin fracture: "
                    "resolved and limit interface models, width sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single run with file outputs")
    run.add_argument("config")
    run.add_argument("--model", choices=("epsilon", "effective"),
                     default="epsilon")
    run.add_argument("--epsilon", type=float, default=None,
                     help="fracture width (default: first config value)")
    run.add_argument("--output-dir", default="fracflow-out")
    run.add_argument("--snapshot-times", type=_times_arg, default=None)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="width sweep against the limit "
                                         "model")
    sweep.add_argument("config")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--output-dir", default="fracflow-out")
    sweep.set_defaults(func=cmd_sweep)

    check = sub.add_parser("check", help="invariant spot-checks for a "
                                         "config")
    check.add_argument("config")
    check.set_defaults(func=cmd_check)
    return parser


def _times_arg(text):
    return [float(t) for t in text.split(",") if t.strip()]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return CONFIG_ERROR
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
