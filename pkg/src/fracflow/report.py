"""File outputs for runs and sweeps: delimited tables, grid files, figures.

Everything numeric is serialized with 17 significant digits so repeated
runs of the same config produce byte-identical delimited files.  Figures
are rendered with the Agg backend and saved next to the tables.
"""

from __future__ import annotations

import os

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .mesh import SUBDOMAIN_NAMES  # noqa: E402

FMT = "%.17g"


def time_tag(t: float) -> str:
    """Filesystem-safe tag for a snapshot time (0.18 -> 't0p18')."""
    return "t" + ("%g" % t).replace(".", "p").replace("-", "m")


def write_steps_csv(series, path: str) -> str:
    cols = ("step", "time", "iterations", "update_norm", "residual_norm",
            "balance_residual", "balance_relative")
    lines = [",".join(cols)]
    for r in series.reports:
        lines.append(",".join([
            str(r.step), FMT % r.time, str(r.iterations),
            FMT % r.update_norm, FMT % r.residual_norm,
            FMT % r.balance.residual, FMT % r.balance.relative]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_fields_csv(state, grid, path: str) -> str:
    sat = state.saturation
    lines = ["x,y,subdomain,psi,saturation"]
    for i in range(grid.n_cells):
        lines.append(",".join([
            FMT % grid.cell_x[i], FMT % grid.cell_y[i],
            SUBDOMAIN_NAMES[grid.cell_sub[i]],
            FMT % state.psi[i], FMT % sat[i]]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_interface_csv(fields, path: str, node_y=None) -> str:
    """Interface head per row and time; scalar heads broadcast to one row."""
    lines = ["time,y,psi_f"]
    for fld in fields:
        if fld.values is None:
            continue
        ys = node_y if node_y is not None and fld.values.size > 1 \
            else np.arange(fld.values.size, dtype=float)
        for y, v in zip(np.atleast_1d(ys), fld.values):
            lines.append(",".join([FMT % fld.time, FMT % y, FMT % v]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_interface_steps_csv(reports, path: str) -> str:
    lines = ["time,net_inflow,constraint_residual,budget_residual"]
    for r in reports:
        lines.append(",".join([
            FMT % r.time, FMT % r.net_inflow,
            "" if r.constraint_residual is None else
            FMT % r.constraint_residual,
            "" if r.budget_residual is None else FMT % r.budget_residual]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _block_arrays(state, grid, name):
    ids = grid.cells_in(name)
    nx, ny = grid.counts[name]
    psi = state.psi[ids].reshape(nx, ny)
    sat = state.saturation[ids].reshape(nx, ny)
    if grid.layout is not None:
        x0, x1 = grid.layout.extent(name)[:2]
    else:
        x0 = float(grid.cell_x[ids].min() - 0.5 * grid.cell_dx[ids][0])
        x1 = float(grid.cell_x[ids].max() + 0.5 * grid.cell_dx[ids][0])
    return psi, sat, (x0, x1), (nx, ny)


def write_vtk(state, grid, name: str, path: str) -> str:
    """Legacy ASCII rectilinear-grid file of one subdomain's cell data."""
    psi, sat, (x0, x1), (nx, ny) = _block_arrays(state, grid, name)
    xs = x0 + (x1 - x0) / nx * np.arange(nx + 1)
    ys = np.arange(ny + 1) / ny
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"head and saturation, subdomain {name}\n")
        fh.write("ASCII\nDATASET RECTILINEAR_GRID\n")
        fh.write(f"DIMENSIONS {nx + 1} {ny + 1} 1\n")
        fh.write(f"X_COORDINATES {nx + 1} double\n")
        fh.write(" ".join(FMT % v for v in xs) + "\n")
        fh.write(f"Y_COORDINATES {ny + 1} double\n")
        fh.write(" ".join(FMT % v for v in ys) + "\n")
        fh.write("Z_COORDINATES 1 double\n0\n")
        fh.write(f"CELL_DATA {nx * ny}\n")
        for label, arr in (("psi", psi), ("saturation", sat)):
            fh.write(f"SCALARS {label} double 1\nLOOKUP_TABLE default\n")
            # VTK cell order is x-fastest
            fh.write("\n".join(FMT % v for v in arr.T.ravel()) + "\n")
    return path


def save_field_maps(state, grid, path: str, title: str = "") -> str:
    """Head and saturation maps over all subdomain blocks in one figure."""
    names = [n for n in grid.counts]
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2), sharey=True)
    panels = [("pressure head", "psi", "viridis"),
              ("saturation", "sat", "Blues")]
    for ax, (label, which, cmap) in zip(axes, panels):
        vals = state.psi if which == "psi" else state.saturation
        vmin, vmax = float(np.min(vals)), float(np.max(vals))
        if vmin == vmax:
            vmin, vmax = vmin - 0.5, vmax + 0.5
        mappable = None
        for name in names:
            psi, sat, (x0, x1), (nx, ny) = _block_arrays(state, grid, name)
            arr = psi if which == "psi" else sat
            xs = x0 + (x1 - x0) / nx * np.arange(nx + 1)
            ys = np.arange(ny + 1) / ny
            mappable = ax.pcolormesh(xs, ys, arr.T, cmap=cmap, vmin=vmin,
                                     vmax=vmax)
        ax.set_title(f"{label}, t = {state.time:g}")
        ax.set_xlabel("x")
        fig.colorbar(mappable, ax=ax)
    axes[0].set_ylabel("y")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_interface_profiles(fields, node_y, path: str) -> str:
    """Interface head profile at a few times (reduced models only)."""
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    with_vals = [f for f in fields if f.values is not None]
    if with_vals:
        picks = sorted({0, len(with_vals) // 2, len(with_vals) - 1})
        for i in picks:
            fld = with_vals[i]
            vals = np.broadcast_to(fld.values, node_y.shape)
            ax.plot(vals, node_y, label=f"t = {fld.time:g}")
        ax.legend()
    ax.set_xlabel("interface head")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_sweep_plot(table, path: str) -> str:
    """Log-log error and flatness decay against the fracture width."""
    from .upscale import table_plot_series

    series = table_plot_series(table)
    fig, ax = plt.subplots(figsize=(5.6, 4.4))
    styles = {"fracture": "o-", "m1": "s--", "m2": "d--", "flatness": "^:"}
    for key, pairs in series.items():
        if not pairs:
            continue
        eps = [p[0] for p in pairs]
        val = [p[1] for p in pairs]
        if all(v > 0.0 for v in val):
            ax.loglog(eps, val, styles[key], label=key)
    ax.set_xlabel("fracture width")
    ax.set_ylabel("L2 difference at final time")
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def snapshot_outputs(series, grid, times, out_dir, prefix="fields") -> list:
    """Field CSV, per-block grid files, and a field map per snapshot time."""
    paths = []
    all_times = np.array([s.time for s in series.states])
    for t in times:
        idx = int(np.argmin(np.abs(all_times - t)))
        state = series.states[idx]
        tag = time_tag(state.time)
        paths.append(write_fields_csv(
            state, grid, os.path.join(out_dir, f"{prefix}_{tag}.csv")))
        for name in grid.counts:
            paths.append(write_vtk(
                state, grid, name,
                os.path.join(out_dir, f"{prefix}_{tag}_{name}.vtk")))
        paths.append(save_field_maps(
            state, grid, os.path.join(out_dir, f"{prefix}_{tag}.png")))
    return paths
