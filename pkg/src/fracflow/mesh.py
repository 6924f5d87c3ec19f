"""Dimensionless geometry and matching rectangular grids.

The domain is a vertical strip of porous matrix cut by a straight vertical
fracture of dimensionless width ``width_ratio``.  At a positive width ratio
the strip splits into three subdomains (left matrix block, fracture, right
matrix block) that meet along the internal interfaces gamma1 and gamma2; at
width ratio exactly 0 the fracture collapses onto the single interface
gamma = {0} x (0,1) and the matrix blocks abut.

Grids are uniform rectangles per subdomain, matching along the interfaces
(all subdomains share the vertical cell count).  Cells are numbered block by
block, column-major within a block: ``id = offset + ix*ny + iy``.  Faces are
stored struct-of-arrays; boundary faces carry ``neighbor = -1`` and use the
single half-cell distance in their transmissibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "UnsupportedRegimeError",
    "ScalingRegime",
    "DomainLayout",
    "Grid",
    "build_geometry",
    "build_grid",
    "build_single_block_grid",
    "default_fracture_nx",
    "face_transmissibility",
    "face_transmissibilities",
    "mesh_report",
    "SUB_M1",
    "SUB_F",
    "SUB_M2",
    "SUBDOMAIN_NAMES",
    "EDGE_LEFT",
    "EDGE_RIGHT",
    "EDGE_BOTTOM",
    "EDGE_TOP",
    "EDGE_NAMES",
    "FACE_INTERIOR",
    "FACE_GAMMA1",
    "FACE_GAMMA2",
    "FACE_GAMMA",
]

SUB_M1, SUB_F, SUB_M2 = 0, 1, 2
SUBDOMAIN_NAMES = ("m1", "f", "m2")

EDGE_LEFT, EDGE_RIGHT, EDGE_BOTTOM, EDGE_TOP = 0, 1, 2, 3
EDGE_NAMES = ("left", "right", "bottom", "top")

# face kinds: plain interior, the two fracture walls of the resolved
# geometry, and the collapsed interface of the reduced geometry
FACE_INTERIOR, FACE_GAMMA1, FACE_GAMMA2, FACE_GAMMA = 0, 1, 2, 3


class UnsupportedRegimeError(ValueError):
    """Raised for scaling regimes without a reduced limit model."""


@dataclass(frozen=True)
class ScalingRegime:
    """Width ratio and coefficient scaling exponents of the fracture.

    ``width_ratio`` is the fracture width over the matrix block width
    (positive for the resolved geometry, exactly 0 for the reduced one).
    The fracture porosity scales as ``width_ratio**porosity_exp`` times the
    material ratio, the fracture conductivity as
    ``width_ratio**conductivity_exp`` times its ratio.
    """

    width_ratio: float
    porosity_exp: float = -1.0
    conductivity_exp: float = -1.0

    def __post_init__(self) -> None:
        if not self.width_ratio >= 0.0:
            raise ValueError("width_ratio must be nonnegative")
        if not (np.isfinite(self.porosity_exp)
                and np.isfinite(self.conductivity_exp)):
            raise ValueError("scaling exponents must be finite")

    @property
    def reduced(self) -> bool:
        return self.width_ratio == 0.0


@dataclass(frozen=True)
class DomainLayout:
    """Subdomain extents ``(x0, x1, y0, y1)`` for one width ratio."""

    width_ratio: float
    matrix_width: float
    m1: tuple[float, float, float, float]
    fracture: tuple[float, float, float, float] | None
    m2: tuple[float, float, float, float]

    @property
    def reduced(self) -> bool:
        return self.fracture is None

    @property
    def gamma1_x(self) -> float:
        return -0.5 * self.width_ratio

    @property
    def gamma2_x(self) -> float:
        return 0.5 * self.width_ratio

    @property
    def area(self) -> float:
        return 2.0 * self.matrix_width + self.width_ratio

    def extent(self, name: str):
        return {"m1": self.m1, "f": self.fracture, "m2": self.m2}[name]


def build_geometry(regime, matrix_width: float = 1.0) -> DomainLayout:
    """Subdomain layout for a width ratio (``regime`` or plain float).

    A positive width ratio gives the three-subdomain resolved geometry, 0
    the reduced one with the matrix blocks abutting at x = 0.  The matrix
    blocks have width ``matrix_width`` (two conventions are in circulation;
    1 is the benchmark's, 1/2 the alternative).
    """
    eps = float(getattr(regime, "width_ratio", regime))
    if eps < 0.0:
        raise ValueError("width ratio must be nonnegative")
    if matrix_width <= 0.0:
        raise ValueError("matrix_width must be positive")
    w = float(matrix_width)
    if eps == 0.0:
        return DomainLayout(
            width_ratio=0.0, matrix_width=w,
            m1=(-w, 0.0, 0.0, 1.0), fracture=None, m2=(0.0, w, 0.0, 1.0))
    return DomainLayout(
        width_ratio=eps, matrix_width=w,
        m1=(-w - 0.5 * eps, -0.5 * eps, 0.0, 1.0),
        fracture=(-0.5 * eps, 0.5 * eps, 0.0, 1.0),
        m2=(0.5 * eps, w + 0.5 * eps, 0.0, 1.0))


def default_fracture_nx(width_ratio: float, ny: int) -> int:
    """Transverse fracture cell count halving per decade of width ratio.

    Reproduces the benchmark series 160/80/40/20/10 for width ratios
    1 ... 1e-4 at ny = 160 and never drops below 2 cells.
    """
    if width_ratio <= 0.0:
        raise ValueError("width ratio must be positive")
    return max(2, round(ny * 2.0 ** np.log10(width_ratio)))


@dataclass(frozen=True)
class Grid:
    """Matching rectangular grid, immutable after construction.

    Cell arrays are indexed by the global cell id; face arrays hold interior
    faces (including the tagged interface faces) followed by boundary faces
    with ``neighbor = -1``.  For the reduced geometry the interface rows are
    additionally exposed as ``gamma_m1``/``gamma_m2`` (adjacent cell per
    row) with ``interface_y``/``interface_dy`` for interface-value unknowns.
    """

    layout: DomainLayout | None
    counts: dict
    offsets: dict
    cell_x: np.ndarray
    cell_y: np.ndarray
    cell_dx: np.ndarray
    cell_dy: np.ndarray
    cell_sub: np.ndarray
    face_owner: np.ndarray
    face_neighbor: np.ndarray
    face_area: np.ndarray
    face_d_owner: np.ndarray
    face_d_neighbor: np.ndarray
    face_kind: np.ndarray
    face_axis: np.ndarray
    face_edge: np.ndarray
    face_x: np.ndarray
    face_y: np.ndarray
    gamma_m1: np.ndarray | None = None
    gamma_m2: np.ndarray | None = None
    interface_y: np.ndarray | None = None
    interface_dy: np.ndarray | None = None

    @property
    def n_cells(self) -> int:
        return self.cell_x.size

    @property
    def n_faces(self) -> int:
        return self.face_owner.size

    @property
    def cell_area(self) -> np.ndarray:
        return self.cell_dx * self.cell_dy

    @property
    def interior_faces(self) -> np.ndarray:
        return np.nonzero(self.face_neighbor >= 0)[0]

    @property
    def boundary_faces(self) -> np.ndarray:
        return np.nonzero(self.face_neighbor < 0)[0]

    def cells_in(self, name: str) -> np.ndarray:
        sub = SUBDOMAIN_NAMES.index(name)
        return np.nonzero(self.cell_sub == sub)[0]


class _FaceBuffer:
    def __init__(self):
        self.owner = []
        self.neighbor = []
        self.area = []
        self.d_owner = []
        self.d_neighbor = []
        self.kind = []
        self.axis = []
        self.edge = []
        self.x = []
        self.y = []

    def add(self, owner, neighbor, area, d_owner, d_neighbor, kind, axis,
            edge, x, y):
        n = len(owner)
        self.owner.append(np.asarray(owner, dtype=np.int64))
        self.neighbor.append(np.asarray(neighbor, dtype=np.int64)
                             if not np.isscalar(neighbor)
                             else np.full(n, neighbor, dtype=np.int64))
        self.area.append(np.broadcast_to(np.asarray(area, float), (n,)).copy())
        self.d_owner.append(np.broadcast_to(
            np.asarray(d_owner, float), (n,)).copy())
        self.d_neighbor.append(np.broadcast_to(
            np.asarray(d_neighbor, float), (n,)).copy())
        self.kind.append(np.full(n, kind, dtype=np.int8))
        self.axis.append(np.full(n, axis, dtype=np.int8))
        self.edge.append(np.full(n, edge, dtype=np.int8))
        self.x.append(np.broadcast_to(np.asarray(x, float), (n,)).copy())
        self.y.append(np.broadcast_to(np.asarray(y, float), (n,)).copy())

    def arrays(self):
        cat = np.concatenate
        return dict(
            face_owner=cat(self.owner), face_neighbor=cat(self.neighbor),
            face_area=cat(self.area), face_d_owner=cat(self.d_owner),
            face_d_neighbor=cat(self.d_neighbor), face_kind=cat(self.kind),
            face_axis=cat(self.axis), face_edge=cat(self.edge),
            face_x=cat(self.x), face_y=cat(self.y))


def _block_cells(extent, nx, ny):
    x0, x1, y0, y1 = extent
    dx = (x1 - x0) / nx
    dy = (y1 - y0) / ny
    cx = x0 + dx * (np.arange(nx) + 0.5)
    cy = y0 + dy * (np.arange(ny) + 0.5)
    # column-major: id = ix*ny + iy
    X = np.repeat(cx, ny)
    Y = np.tile(cy, nx)
    return X, Y, dx, dy


def _block_interior_faces(buf, off, extent, nx, ny, dx, dy):
    x0, x1, y0, y1 = extent
    cy = y0 + dy * (np.arange(ny) + 0.5)
    cx = x0 + dx * (np.arange(nx) + 0.5)
    if nx > 1:
        ix = np.repeat(np.arange(nx - 1), ny)
        iy = np.tile(np.arange(ny), nx - 1)
        owner = off + ix * ny + iy
        buf.add(owner, owner + ny, dy, 0.5 * dx, 0.5 * dx, FACE_INTERIOR,
                0, -1, x0 + dx * (ix + 1.0), y0 + dy * (iy + 0.5))
    if ny > 1:
        ix = np.repeat(np.arange(nx), ny - 1)
        iy = np.tile(np.arange(ny - 1), nx)
        owner = off + ix * ny + iy
        buf.add(owner, owner + 1, dx, 0.5 * dy, 0.5 * dy, FACE_INTERIOR,
                1, -1, x0 + dx * (ix + 0.5), y0 + dy * (iy + 1.0))
    return cx, cy


def _column_ids(off, ix, ny):
    return off + ix * ny + np.arange(ny)


def _row_ids(off, iy, nx, ny):
    return off + np.arange(nx) * ny + iy


def build_grid(layout: DomainLayout, resolution) -> Grid:
    """Matching grid from per-subdomain ``(nx, ny)`` cell counts.

    ``resolution`` maps subdomain names ("m1", "f", "m2") to cell counts.
    All subdomains must share ny (the interfaces are vertical, so matching
    means equal vertical subdivision).  For the reduced layout the "f"
    entry is optional and only its ny is honored.
    """
    res = dict(resolution)
    for name in ("m1", "m2"):
        if name not in res:
            raise ValueError(f"resolution missing subdomain {name!r}")
    if not layout.reduced and "f" not in res:
        raise ValueError("resolution missing subdomain 'f'")
    ny_set = {int(res[k][1]) for k in res}
    if len(ny_set) != 1:
        raise ValueError(f"subdomains must share ny, got {sorted(ny_set)}")
    ny = ny_set.pop()
    if ny < 1 or any(int(res[k][0]) < 1 for k in res):
        raise ValueError("cell counts must be >= 1")

    names = ["m1", "m2"] if layout.reduced else ["m1", "f", "m2"]
    subs = {"m1": SUB_M1, "f": SUB_F, "m2": SUB_M2}

    counts = {}
    offsets = {}
    xs, ys, dxs, dys, tags = [], [], [], [], []
    block_dx = {}
    off = 0
    for name in names:
        nx = int(res[name][0])
        counts[name] = (nx, ny)
        offsets[name] = off
        X, Y, dx, dy = _block_cells(layout.extent(name), nx, ny)
        block_dx[name] = dx
        xs.append(X)
        ys.append(Y)
        dxs.append(np.full(X.size, dx))
        dys.append(np.full(X.size, dy))
        tags.append(np.full(X.size, subs[name], dtype=np.int8))
        off += nx * ny

    buf = _FaceBuffer()
    centers = {}
    for name in names:
        nx = counts[name][0]
        dx = block_dx[name]
        centers[name] = _block_interior_faces(
            buf, offsets[name], layout.extent(name), nx, ny, dx, 1.0 / ny)
    dy = 1.0 / ny
    cy = 0.0 + dy * (np.arange(ny) + 0.5)

    if layout.reduced:
        left = _column_ids(offsets["m1"], counts["m1"][0] - 1, ny)
        right = _column_ids(offsets["m2"], 0, ny)
        buf.add(left, right, dy, 0.5 * block_dx["m1"], 0.5 * block_dx["m2"],
                FACE_GAMMA, 0, -1, 0.0, cy)
        gamma_m1, gamma_m2 = left, right
        interface_y = cy
        interface_dy = np.full(ny, dy)
    else:
        m1_last = _column_ids(offsets["m1"], counts["m1"][0] - 1, ny)
        f_first = _column_ids(offsets["f"], 0, ny)
        f_last = _column_ids(offsets["f"], counts["f"][0] - 1, ny)
        m2_first = _column_ids(offsets["m2"], 0, ny)
        buf.add(m1_last, f_first, dy, 0.5 * block_dx["m1"],
                0.5 * block_dx["f"], FACE_GAMMA1, 0, -1, layout.gamma1_x, cy)
        buf.add(f_last, m2_first, dy, 0.5 * block_dx["f"],
                0.5 * block_dx["m2"], FACE_GAMMA2, 0, -1, layout.gamma2_x, cy)
        gamma_m1 = gamma_m2 = interface_y = interface_dy = None

    # external boundary: left wall of m1, right wall of m2, and the bottom
    # and top edges of every subdomain (fracture included when resolved)
    x0_m1 = layout.m1[0]
    x1_m2 = layout.m2[1]
    buf.add(_column_ids(offsets["m1"], 0, ny), -1, dy,
            0.5 * block_dx["m1"], 0.0, FACE_INTERIOR, 0, EDGE_LEFT,
            x0_m1, cy)
    buf.add(_column_ids(offsets["m2"], counts["m2"][0] - 1, ny), -1, dy,
            0.5 * block_dx["m2"], 0.0, FACE_INTERIOR, 0, EDGE_RIGHT,
            x1_m2, cy)
    for name in names:
        nx = counts[name][0]
        dx = block_dx[name]
        cx = centers[name][0]
        buf.add(_row_ids(offsets[name], 0, nx, ny), -1, dx, 0.5 * dy, 0.0,
                FACE_INTERIOR, 1, EDGE_BOTTOM, cx, 0.0)
        buf.add(_row_ids(offsets[name], ny - 1, nx, ny), -1, dx, 0.5 * dy,
                0.0, FACE_INTERIOR, 1, EDGE_TOP, cx, 1.0)

    return Grid(
        layout=layout, counts=counts, offsets=offsets,
        cell_x=np.concatenate(xs), cell_y=np.concatenate(ys),
        cell_dx=np.concatenate(dxs), cell_dy=np.concatenate(dys),
        cell_sub=np.concatenate(tags),
        gamma_m1=gamma_m1, gamma_m2=gamma_m2, interface_y=interface_y,
        interface_dy=interface_dy, **buf.arrays())


def build_single_block_grid(extent, nx: int, ny: int) -> Grid:
    """Uniform grid on one rectangle, all four edges external.

    Used by verification problems that need a plain rectangle without any
    interface; cells are tagged as the left matrix block.
    """
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be >= 1")
    x0, x1, y0, y1 = (float(v) for v in extent)
    X, Y, dx, dy = _block_cells((x0, x1, y0, y1), nx, ny)
    buf = _FaceBuffer()
    cx, cy = _block_interior_faces(buf, 0, (x0, x1, y0, y1), nx, ny, dx, dy)
    buf.add(_column_ids(0, 0, ny), -1, dy, 0.5 * dx, 0.0, FACE_INTERIOR,
            0, EDGE_LEFT, x0, cy)
    buf.add(_column_ids(0, nx - 1, ny), -1, dy, 0.5 * dx, 0.0, FACE_INTERIOR,
            0, EDGE_RIGHT, x1, cy)
    buf.add(_row_ids(0, 0, nx, ny), -1, dx, 0.5 * dy, 0.0, FACE_INTERIOR,
            1, EDGE_BOTTOM, cx, y0)
    buf.add(_row_ids(0, ny - 1, nx, ny), -1, dx, 0.5 * dy, 0.0,
            FACE_INTERIOR, 1, EDGE_TOP, cx, y1)
    return Grid(
        layout=None, counts={"m1": (nx, ny)}, offsets={"m1": 0},
        cell_x=X, cell_y=Y, cell_dx=np.full(X.size, dx),
        cell_dy=np.full(X.size, dy),
        cell_sub=np.full(X.size, SUB_M1, dtype=np.int8), **buf.arrays())


def face_transmissibility(grid: Grid, face: int, k_owner, k_neighbor=None):
    """Two-point transmissibility of one face.

    Interior faces use the distance-weighted harmonic average
    ``A / (d_o/k_o + d_n/k_n)``; boundary faces use the single half-cell
    distance ``A k_o / d_o``.
    """
    if k_owner is None or k_owner <= 0.0:
        raise ValueError("conductivities must be positive")
    A = grid.face_area[face]
    if grid.face_neighbor[face] < 0:
        return A * k_owner / grid.face_d_owner[face]
    if k_neighbor is None or k_neighbor <= 0.0:
        raise ValueError("conductivities must be positive")
    return A / (grid.face_d_owner[face] / k_owner
                + grid.face_d_neighbor[face] / k_neighbor)


def face_transmissibilities(grid: Grid, k_cell: np.ndarray) -> np.ndarray:
    """Vector of transmissibilities for every face, from cell conductivities."""
    k_cell = np.asarray(k_cell, dtype=float)
    if np.any(k_cell <= 0.0):
        raise ValueError("conductivities must be positive")
    k_o = k_cell[grid.face_owner]
    T = np.empty(grid.n_faces)
    interior = grid.face_neighbor >= 0
    nbr = np.where(interior, grid.face_neighbor, 0)
    k_n = k_cell[nbr]
    with np.errstate(divide="ignore"):
        T_int = grid.face_area / (grid.face_d_owner / k_o
                                  + grid.face_d_neighbor / k_n)
    T_bnd = grid.face_area * k_o / grid.face_d_owner
    T[:] = np.where(interior, T_int, T_bnd)
    return T


def mesh_report(grid: Grid) -> str:
    """Structured-text summary (cell counts, extents, face counts)."""
    lines = []
    lay = grid.layout
    if lay is None:
        lines.append("geometry: single block")
    elif lay.reduced:
        lines.append("geometry: reduced interface")
        lines.append(f"matrix width: {lay.matrix_width:.12g}")
    else:
        lines.append(
            f"geometry: resolved fracture, width ratio {lay.width_ratio:.12g}")
        lines.append(f"matrix width: {lay.matrix_width:.12g}")
    for name in ("m1", "f", "m2"):
        if name not in grid.counts:
            continue
        nx, ny = grid.counts[name]
        ids = grid.cells_in(name)
        dx = grid.cell_dx[ids[0]]
        dy = grid.cell_dy[ids[0]]
        if lay is not None:
            x0, x1 = lay.extent(name)[:2]
        else:
            x0 = grid.cell_x[ids].min() - 0.5 * dx
            x1 = grid.cell_x[ids].max() + 0.5 * dx
        lines.append(
            f"subdomain {name}: x [{x0:.12g}, {x1:.12g}], cells {nx} x {ny},"
            f" dx {dx:.12g}, dy {dy:.12g}")
    kinds = grid.face_kind
    interior = grid.face_neighbor >= 0
    n_plain = int(np.sum(interior & (kinds == FACE_INTERIOR)))
    lines.append(f"interior faces: {n_plain}")
    for kind, label in ((FACE_GAMMA1, "gamma1"), (FACE_GAMMA2, "gamma2"),
                        (FACE_GAMMA, "gamma")):
        n = int(np.sum(kinds == kind))
        if n:
            lines.append(f"{label} faces: {n}")
    lines.append(f"boundary faces: {int(np.sum(~interior))}")
    lines.append(f"cells: {grid.n_cells}")
    lines.append(f"total area: {float(np.sum(grid.cell_area)):.12g}")
    return "\n".join(lines) + "\n"
