"""Width-averaging, comparison norms, and the width-sweep harness.

The sweep solves the limit model once on the reduced layout, then the
resolved model for each fracture width in the list, and compares at the
final time: fracture heads are averaged across the width before the
comparison, matrix blocks are compared cell-by-cell after the rigid
shift of half a width that maps each block onto its reduced position
(same cell counts, so indices align exactly and nothing is
interpolated).
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .effective import (
    EffectiveVariant,
    interface_trace,
    run_effective,
    select_variant,
)
from .fullmodel import Discretization, run_simulation
from .mesh import Grid, ScalingRegime


def _fracture_block(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Fracture cells as a (columns, rows) array."""
    ids = grid.cells_in("f")
    if ids.size == 0:
        raise ValueError("grid has no fracture cells")
    nxf, ny = grid.counts["f"]
    return values[ids].reshape(nxf, ny)


def x_average(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Head averaged across the fracture width, one value per row."""
    block = _fracture_block(values, grid)
    ids = grid.cells_in("f")
    dx = grid.cell_dx[ids].reshape(block.shape)
    return np.sum(block * dx, axis=0) / grid.layout.width_ratio


def y_average(profile: np.ndarray, seg) -> float:
    """Integral of a per-row profile along the unit-length interface."""
    profile = np.asarray(profile, dtype=float)
    seg = np.broadcast_to(np.asarray(seg, dtype=float), profile.shape)
    return float(np.sum(profile * seg))


def l2_error(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> float:
    """Weighted discrete L2 distance, weights being cell measures."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if a.shape != b.shape or a.shape != weights.shape:
        raise ValueError(
            f"incompatible shapes {a.shape}, {b.shape}, {weights.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2 * weights)))


def transversal_flatness(values: np.ndarray, grid: Grid, z0: float) -> float:
    """L2 norm over the interface of (column at z0 minus the row average).

    ``z0`` is a cross-fracture coordinate in [-1/2, 1/2]; the cell column
    nearest ``z0 * width`` is used.
    """
    block = _fracture_block(values, grid)
    ids = grid.cells_in("f")
    nxf, ny = block.shape
    col_x = grid.cell_x[ids].reshape(nxf, ny)[:, 0]
    target = z0 * grid.layout.width_ratio
    j = int(np.argmin(np.abs(col_x - target)))
    dx = grid.cell_dx[ids].reshape(nxf, ny)
    row_mean = np.sum(block * dx, axis=0) / grid.layout.width_ratio
    dy = grid.cell_dy[ids].reshape(nxf, ny)[0]
    return float(np.sqrt(np.sum((block[j] - row_mean) ** 2 * dy)))


@dataclass
class SweepRow:
    """One width's comparison against the limit model at the final time."""

    epsilon: float
    err_fracture: float
    err_m1: float
    err_m2: float
    flatness: tuple      # at cross-coordinates -1/2, 0, +1/2
    iterations_total: int
    wall_time: float
    failure: str | None = None

    @property
    def flatness_mid(self) -> float:
        return self.flatness[1]


@dataclass
class ConvergenceTable:
    rows: list
    variant: EffectiveVariant
    end_time: float
    effective_iterations: int

    def validate(self) -> None:
        eps = [r.epsilon for r in self.rows]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("width values must be strictly decreasing")


def effective_interface_profile(variant, field, matrix_state, config,
                                disc=None) -> np.ndarray:
    """Limit-model interface head as one value per interface row."""
    if variant is EffectiveVariant.CONTINUOUS:
        return interface_trace(matrix_state, config, disc=disc)
    values = field.values
    if values.size == 1:
        ny = config.ny
        return np.full(ny, float(values[0]))
    return values


def _failed_row(eps: float, exc: Exception) -> SweepRow:
    nan = float("nan")
    return SweepRow(epsilon=eps, err_fracture=nan, err_m1=nan, err_m2=nan,
                    flatness=(nan, nan, nan), iterations_total=0,
                    wall_time=0.0, failure=f"{type(exc).__name__}: {exc}")


def _sweep_member(base_config, eps, eff, progress):
    """One resolved run compared against the precomputed limit fields."""
    psi_eff, profile_eff, red_grid = eff
    r = base_config.regime
    config = dataclasses.replace(
        base_config,
        regime=ScalingRegime(width_ratio=eps, porosity_exp=r.porosity_exp,
                             conductivity_exp=r.conductivity_exp))
    disc = Discretization(config)
    series = run_simulation(config, disc=disc, progress=progress)
    final = series.states[-1]
    g = disc.grid

    ubar = x_average(final.psi, g)
    seg = red_grid.interface_dy
    err_f = l2_error(ubar, profile_eff, seg)
    errs_m = {}
    for name in ("m1", "m2"):
        ids_eps = g.cells_in(name)
        ids_red = red_grid.cells_in(name)
        errs_m[name] = l2_error(final.psi[ids_eps], psi_eff[ids_red],
                                red_grid.cell_area[ids_red])
    u = config.fracture_material.kirchhoff(
        final.psi[g.cells_in("f")])
    u_full = np.zeros(g.n_cells)
    u_full[g.cells_in("f")] = u
    flat = tuple(transversal_flatness(u_full, g, z0)
                 for z0 in (-0.5, 0.0, 0.5))
    return SweepRow(epsilon=eps, err_fracture=err_f, err_m1=errs_m["m1"],
                    err_m2=errs_m["m2"], flatness=flat,
                    iterations_total=sum(r.iterations
                                         for r in series.reports),
                    wall_time=series.wall_time)


def epsilon_sweep(base_config, epsilons, variant=None, jobs: int = 1,
                  progress=None) -> ConvergenceTable:
    """Compare the resolved model against the limit model over a width list.

    Widths must be strictly decreasing; a zero width means the limit
    model compared against itself (a row of exact zeros).  A member run
    that fails is recorded in its row and the sweep continues.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValueError("empty width list")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("width values must be strictly decreasing")

    variant_auto = select_variant(base_config.regime)
    if variant is None:
        variant = variant_auto
    elif variant is not variant_auto:
        raise ValueError(f"variant {variant.value} does not match the "
                         f"regime's limit model {variant_auto.value}")

    eff_series, eff_iface = run_effective(base_config, variant=variant)
    eff_final = eff_series.states[-1]
    red_cfg = dataclasses.replace(
        base_config,
        regime=ScalingRegime(width_ratio=0.0,
                             porosity_exp=base_config.regime.porosity_exp,
                             conductivity_exp=base_config.regime
                             .conductivity_exp))
    red_grid = Discretization(red_cfg, include_gamma=True).grid
    profile_eff = effective_interface_profile(
        variant, eff_iface.fields[-1], eff_final, red_cfg)
    eff = (eff_final.psi, profile_eff, red_grid)
    eff_iters = sum(r.iterations for r in eff_series.reports)

    def member(eps):
        if eps == 0.0:
            return SweepRow(epsilon=0.0, err_fracture=0.0, err_m1=0.0,
                            err_m2=0.0, flatness=(0.0, 0.0, 0.0),
                            iterations_total=0, wall_time=0.0)
        try:
            return _sweep_member(base_config, eps, eff, progress)
        except Exception as exc:     # per-row capture, sweep continues
            return _failed_row(eps, exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(member, eps_list))
    else:
        rows = [member(e) for e in eps_list]

    table = ConvergenceTable(rows=rows, variant=variant,
                             end_time=base_config.end_time,
                             effective_iterations=eff_iters)
    table.validate()
    return table


CSV_COLUMNS = ("epsilon", "err_fracture", "err_m1", "err_m2",
               "flatness_mid", "iterations_total")


def table_to_csv(table: ConvergenceTable) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in table.rows:
        lines.append(",".join([
            "%.17g" % r.epsilon, "%.17g" % r.err_fracture,
            "%.17g" % r.err_m1, "%.17g" % r.err_m2,
            "%.17g" % r.flatness_mid, str(r.iterations_total)]))
    return "\n".join(lines) + "\n"


def table_plot_series(table: ConvergenceTable) -> dict:
    """Two-column (width, value) series per error, for log-log plotting.

    Zero-width and failed rows are omitted: they have no place on a log
    axis.
    """
    series = {}
    for key, get in (("fracture", lambda r: r.err_fracture),
                     ("m1", lambda r: r.err_m1),
                     ("m2", lambda r: r.err_m2),
                     ("flatness", lambda r: r.flatness_mid)):
        pairs = [(r.epsilon, get(r)) for r in table.rows
                 if r.failure is None and r.epsilon > 0.0]
        series[key] = pairs
    return series


def write_plot_series(table: ConvergenceTable, directory) -> list:
    """One whitespace-delimited .dat file per error series; returns paths."""
    paths = []
    for key, pairs in table_plot_series(table).items():
        path = os.path.join(str(directory), f"sweep_{key}.dat")
        with open(path, "w") as fh:
            for eps, val in pairs:
                fh.write("%.17g %.17g\n" % (eps, val))
        paths.append(path)
    return paths
