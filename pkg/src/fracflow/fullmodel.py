"""Resolved-fracture Richards solver.

Implicit Euler in time, cell-centered two-point flux in space, and the
modified Picard linearization of the storage term.  The fracture enters
through per-cell coefficient scalings: storage is multiplied by
``width_ratio**porosity_exp`` times the material storage ratio,
conductivity by ``width_ratio**conductivity_exp`` times the material
conductivity ratio.  Pressure and flux continuity across the fracture walls
hold by construction of the single conservative face flux.

The same machinery discretizes the reduced two-block geometry: a
``Discretization`` built with ``include_gamma=False`` leaves the interface
columns uncoupled so the reduced interface models can insert their own
coupling, while ``include_gamma=True`` on a reduced grid welds the blocks
together (continuity of head and flux across the interface).
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from fracflow.mesh import (
    EDGE_NAMES,
    FACE_GAMMA,
    SUB_F,
    SUBDOMAIN_NAMES,
    Grid,
    ScalingRegime,
    build_geometry,
    build_grid,
    default_fracture_nx,
    face_transmissibilities,
)

__all__ = [
    "StepFailureError",
    "BoundaryCondition",
    "ReferenceScales",
    "SimulationConfig",
    "StateField",
    "BalanceReport",
    "StepReport",
    "TimeSeries",
    "Discretization",
    "nondimensionalize",
    "assemble_system",
    "picard_solve",
    "run_simulation",
    "face_fluxes",
]

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
NOFLOW = "noflow"
_BC_KINDS = (DIRICHLET, NEUMANN, NOFLOW)


class StepFailureError(RuntimeError):
    """A time step failed (non-convergence, singular matrix, NaN state)."""

    def __init__(self, message, step=None, time=None, iteration=None,
                 history=None):
        ctx = []
        if step is not None:
            ctx.append(f"step {step}")
        if time is not None:
            ctx.append(f"t={time:.6g}")
        if iteration is not None:
            ctx.append(f"iteration {iteration}")
        super().__init__(f"{message} ({', '.join(ctx)})" if ctx else message)
        self.step = step
        self.time = time
        self.iteration = iteration
        self.history = list(history) if history is not None else []


@dataclass(frozen=True)
class BoundaryCondition:
    """One condition on an edge segment.

    ``kind`` is "dirichlet" (prescribed head), "neumann" (prescribed inward
    flux; positive values inject water), or "noflow".  ``value`` may be a
    constant or a callable ``(x, y, t)`` evaluated at face centers.
    ``segment`` restricts the condition to a coordinate interval along the
    edge (x for bottom/top, y for left/right); the rest of the edge stays
    no-flow.
    """

    kind: str
    value: object = 0.0
    segment: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in _BC_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.segment is not None and not self.segment[0] < self.segment[1]:
            raise ValueError("segment must be an increasing interval")


@dataclass(frozen=True)
class ReferenceScales:
    """Reference quantities turning dimensional input into dimensionless.

    Heads scale by the reference length, times by the capillary time
    ``porosity * length / conductivity``, sources by porosity over that
    time, fluxes by the reference conductivity.
    """

    length: float
    porosity: float
    conductivity: float

    def __post_init__(self) -> None:
        if min(self.length, self.porosity, self.conductivity) <= 0.0:
            raise ValueError("reference scales must be positive")

    @property
    def time_scale(self) -> float:
        return self.porosity * self.length / self.conductivity

    def head(self, psi_hat):
        return psi_hat / self.length

    def time(self, t_hat):
        return t_hat / self.time_scale

    def source(self, f_hat):
        return f_hat * self.time_scale / self.porosity

    def flux(self, q_hat):
        return q_hat / self.conductivity


@dataclass
class SimulationConfig:
    """Everything one run needs: regime, materials, grid, data, solver."""

    regime: ScalingRegime
    matrix_material: object
    fracture_material: object
    end_time: float
    dt: float
    nx: int = 160
    ny: int = 160
    fracture_nx: int | None = None
    matrix_width: float = 1.0
    picard_tol: float = 1e-5
    picard_max_iters: int = 100
    linear_tol: float = 1e-12
    linear_solver: str = "direct"
    boundary: dict = field(default_factory=dict)
    initial_head: object = -1.0
    source: object = 0.0
    storage_ratio: float | None = None
    conductivity_ratio: float | None = None
    # reduced interface models only: condition at the interface endpoints
    # y in {0, 1}; "dirichlet" clamps the head to zero there
    fracture_ends: str = "dirichlet"
    scales: ReferenceScales | None = None

    def validate(self) -> None:
        if not (self.dt > 0.0 and self.end_time > 0.0):
            raise ValueError("dt and end_time must be positive")
        if not (self.picard_tol > 0.0 and self.linear_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.picard_max_iters < 1:
            raise ValueError("picard_max_iters must be >= 1")
        n = round(self.end_time / self.dt)
        if n < 1 or abs(n * self.dt - self.end_time) > 0.5 * self.dt:
            raise ValueError("dt must tile end_time (within half a step)")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("cell counts must be >= 1")
        if self.linear_solver not in ("direct", "cg"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")
        if self.fracture_ends not in ("dirichlet", "noflow"):
            raise ValueError(
                f"unknown fracture end condition {self.fracture_ends!r}")
        for key, bc in self.boundary.items():
            sub, edge = key
            if sub not in SUBDOMAIN_NAMES or edge not in EDGE_NAMES:
                raise ValueError(f"unknown boundary location {key!r}")
            if not isinstance(bc, BoundaryCondition):
                raise ValueError(f"boundary {key!r} is not a BoundaryCondition")

    @property
    def n_steps(self) -> int:
        return round(self.end_time / self.dt)

    def _auto_ratio(self, attr: str) -> float:
        pf = getattr(self.fracture_material, "params", None)
        pm = getattr(self.matrix_material, "params", None)
        if pf is None or pm is None:
            return 1.0
        return getattr(pf, attr) / getattr(pm, attr)

    @property
    def storage_ratio_value(self) -> float:
        if self.storage_ratio is not None:
            return self.storage_ratio
        return self._auto_ratio("theta_S")

    @property
    def conductivity_ratio_value(self) -> float:
        if self.conductivity_ratio is not None:
            return self.conductivity_ratio
        return self._auto_ratio("K_S")

    @property
    def fracture_storage_scale(self) -> float:
        eps = self.regime.width_ratio
        if eps <= 0.0:
            raise ValueError("storage scale is defined for resolved runs only")
        return self.storage_ratio_value * eps ** self.regime.porosity_exp

    @property
    def fracture_conductivity_scale(self) -> float:
        eps = self.regime.width_ratio
        if eps <= 0.0:
            raise ValueError(
                "conductivity scale is defined for resolved runs only")
        return self.conductivity_ratio_value * eps ** self.regime.conductivity_exp

    def material_for(self, name: str):
        return self.fracture_material if name == "f" else self.matrix_material

    def resolution(self) -> dict:
        if self.regime.reduced:
            return {"m1": (self.nx, self.ny), "m2": (self.nx, self.ny)}
        nxf = self.fracture_nx
        if nxf is None:
            nxf = default_fracture_nx(self.regime.width_ratio, self.ny)
        return {"m1": (self.nx, self.ny), "f": (nxf, self.ny),
                "m2": (self.nx, self.ny)}


def nondimensionalize(scales: ReferenceScales, regime, matrix_material,
                      fracture_material, *, end_time, dt, initial_head,
                      source=0.0, boundary=None, **kwargs) -> SimulationConfig:
    """Config from dimensional end time/step (s), heads (m), sources (1/s).

    Boundary values convert per kind: Dirichlet heads divide by the
    reference length, Neumann fluxes by the reference conductivity.
    Callable data cannot be converted and is rejected.
    """

    def _scalar(v, what):
        if callable(v):
            raise ValueError(f"dimensional {what} must be a constant")
        return v

    def _map(spec, fn, what):
        if isinstance(spec, dict):
            return {k: fn(_scalar(v, what)) for k, v in spec.items()}
        return fn(_scalar(spec, what))

    converted = {}
    for key, bc in (boundary or {}).items():
        if bc.kind == DIRICHLET:
            val = scales.head(_scalar(bc.value, "boundary head"))
        elif bc.kind == NEUMANN:
            val = scales.flux(_scalar(bc.value, "boundary flux"))
        else:
            val = 0.0
        converted[key] = BoundaryCondition(bc.kind, val, bc.segment)
    return SimulationConfig(
        regime=regime, matrix_material=matrix_material,
        fracture_material=fracture_material,
        end_time=scales.time(_scalar(end_time, "end time")),
        dt=scales.time(_scalar(dt, "time step")),
        initial_head=_map(initial_head, scales.head, "initial head"),
        source=_map(source, scales.source, "source"),
        boundary=converted, scales=scales, **kwargs)


@dataclass
class StateField:
    """Heads per cell at one time, with saturation/conductivity views."""

    psi: np.ndarray
    time: float
    saturation: np.ndarray | None = None
    conductivity: np.ndarray | None = None
    report: "StepReport | None" = None

    def require_finite(self, context="state") -> None:
        if not np.all(np.isfinite(self.psi)):
            raise StepFailureError(f"non-finite head in {context}",
                                   time=self.time)


@dataclass(frozen=True)
class BalanceReport:
    """Scheme-consistent mass balance of one accepted step.

    All terms use the quantities the step actually enforced: the linearized
    storage at the accepted head and conductivities frozen at the final
    Picard iterate.  ``residual`` is storage - sources + outflow, which a
    converged step satisfies to linear-solver accuracy.
    """

    storage_rate: float
    source_rate: float
    boundary_outflow: float
    residual: float
    relative: float


@dataclass(frozen=True)
class StepReport:
    step: int
    time: float
    iterations: int
    update_norm: float
    residual_norm: float
    balance: BalanceReport


@dataclass
class TimeSeries:
    """States in time order (initial state first) plus per-step metadata."""

    states: list
    reports: list
    wall_time: float

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def validate(self, end_time: float, dt: float) -> None:
        t = self.times
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if abs(t[-1] - end_time) > 0.5 * dt:
            raise ValueError("series does not reach the end time")


def _resolve_per_subdomain(spec, names, require_all=False):
    if isinstance(spec, dict):
        unknown = set(spec) - set(SUBDOMAIN_NAMES)
        if unknown:
            raise ValueError(f"unknown subdomain keys {sorted(unknown)}")
        if require_all and not set(names) <= set(spec):
            raise ValueError(
                f"per-subdomain value must cover all of {list(names)}")
        return {n: spec.get(n, 0.0) for n in names}
    return {n: spec for n in names}


def _eval_data(spec, x, y, t):
    if callable(spec):
        return np.broadcast_to(np.asarray(spec(x, y, t), dtype=float),
                               x.shape).copy()
    return np.full(x.shape, float(spec))


class Discretization:
    """Static per-run workspace: grid, scalings, sparsity, boundary plan.

    ``include_gamma=False`` (reduced grids only) drops the interface faces
    from the assembled pattern so a reduced interface model can add its own
    coupling between the blocks.
    """

    def __init__(self, config: SimulationConfig, include_gamma: bool = True):
        config.validate()
        self.config = config
        self.include_gamma = include_gamma
        self.layout = build_geometry(config.regime,
                                     matrix_width=config.matrix_width)
        self.grid = build_grid(self.layout, config.resolution())
        g = self.grid
        n = g.n_cells
        self.vol = g.cell_area

        self.sigma_st = np.ones(n)
        self.sigma_cond = np.ones(n)
        if not config.regime.reduced:
            f_ids = g.cells_in("f")
            self.sigma_st[f_ids] = config.fracture_storage_scale
            self.sigma_cond[f_ids] = config.fracture_conductivity_scale

        self.material_slices = []
        matrix_ids = np.nonzero(g.cell_sub != SUB_F)[0]
        if matrix_ids.size:
            self.material_slices.append((matrix_ids, config.matrix_material))
        f_ids = np.nonzero(g.cell_sub == SUB_F)[0]
        if f_ids.size:
            self.material_slices.append((f_ids, config.fracture_material))

        interior = g.face_neighbor >= 0
        if not include_gamma:
            interior = interior & (g.face_kind != FACE_GAMMA)
        self.if_idx = np.nonzero(interior)[0]
        self.if_own = g.face_owner[self.if_idx]
        self.if_nbr = g.face_neighbor[self.if_idx]

        self._plan_boundaries()

        own, nbr = self.if_own, self.if_nbr
        self.rows = np.concatenate(
            [np.arange(n), own, nbr, own, nbr, self.dir_cells])
        self.cols = np.concatenate(
            [np.arange(n), own, nbr, nbr, own, self.dir_cells])

        names = list(g.counts)
        src = _resolve_per_subdomain(config.source, names)
        self.source_groups = [(g.cells_in(nm), src[nm]) for nm in names]
        init = _resolve_per_subdomain(config.initial_head, names,
                                      require_all=True)
        self.init_groups = [(g.cells_in(nm), init[nm]) for nm in names]

    def _plan_boundaries(self):
        g = self.grid
        config = self.config
        bset = g.boundary_faces
        sub_of = g.cell_sub[g.face_owner[bset]]
        edge_of = g.face_edge[bset]
        dir_groups, neu_groups = [], []
        for (sub_name, edge_name), bc in config.boundary.items():
            if bc.kind == NOFLOW:
                continue
            sub = SUBDOMAIN_NAMES.index(sub_name)
            edge = EDGE_NAMES.index(edge_name)
            mask = (sub_of == sub) & (edge_of == edge)
            faces = bset[mask]
            if bc.segment is not None:
                coord = g.face_x[faces] if edge_name in ("bottom", "top") \
                    else g.face_y[faces]
                faces = faces[(coord >= bc.segment[0])
                              & (coord <= bc.segment[1])]
            if faces.size == 0:
                continue
            group = (faces, g.face_owner[faces], bc.value)
            (dir_groups if bc.kind == DIRICHLET else neu_groups).append(group)
        self.dir_groups = dir_groups
        self.neu_groups = neu_groups
        self.dir_faces = (np.concatenate([f for f, _, _ in dir_groups])
                          if dir_groups else np.empty(0, dtype=np.int64))
        self.dir_cells = (np.concatenate([c for _, c, _ in dir_groups])
                          if dir_groups else np.empty(0, dtype=np.int64))

    # -- per-cell material fields -------------------------------------------

    def saturation_of(self, psi: np.ndarray) -> np.ndarray:
        out = np.empty_like(psi)
        for ids, mat in self.material_slices:
            out[ids] = mat.saturation(psi[ids])
        return out

    def d_saturation_of(self, psi: np.ndarray) -> np.ndarray:
        out = np.empty_like(psi)
        for ids, mat in self.material_slices:
            out[ids] = mat.d_saturation(psi[ids])
        return out

    def conductivity_of(self, psi: np.ndarray) -> np.ndarray:
        out = np.empty_like(psi)
        for ids, mat in self.material_slices:
            out[ids] = mat.rel_conductivity(psi=psi[ids])
        return out * self.sigma_cond

    def source_at(self, t: float) -> np.ndarray:
        g = self.grid
        out = np.zeros(g.n_cells)
        for ids, spec in self.source_groups:
            out[ids] = _eval_data(spec, g.cell_x[ids], g.cell_y[ids], t)
        return out

    def initial_state(self) -> StateField:
        g = self.grid
        psi = np.empty(g.n_cells)
        for ids, spec in self.init_groups:
            if callable(spec):
                psi[ids] = np.broadcast_to(
                    np.asarray(spec(g.cell_x[ids], g.cell_y[ids]),
                               dtype=float), ids.shape)
            else:
                psi[ids] = float(spec)
        state = StateField(psi=psi, time=0.0,
                           saturation=self.saturation_of(psi),
                           conductivity=self.conductivity_of(psi))
        state.require_finite("initial state")
        return state

    def _dirichlet_values(self, t: float) -> np.ndarray:
        g = self.grid
        parts = [_eval_data(spec, g.face_x[f], g.face_y[f], t)
                 for f, _, spec in self.dir_groups]
        return np.concatenate(parts) if parts else np.empty(0)

    # -- system assembly ------------------------------------------------------

    def assemble(self, sat_prev, psi_it, t_new):
        """Linearized system at one Picard iterate; returns (A, b, aux)."""
        g = self.grid
        dt = self.config.dt
        S_it = self.saturation_of(psi_it)
        dS_it = self.d_saturation_of(psi_it)
        k_cell = self.conductivity_of(psi_it)
        T = face_transmissibilities(g, k_cell)

        storage = self.sigma_st * self.vol / dt
        diag = storage * dS_it
        T_in = T[self.if_idx]
        T_dir = T[self.dir_faces]
        data = np.concatenate([diag, T_in, T_in, -T_in, -T_in, T_dir])
        A = sp.coo_matrix((data, (self.rows, self.cols)),
                          shape=(g.n_cells, g.n_cells)).tocsr()

        src = self.source_at(t_new)
        b = src * self.vol + storage * (dS_it * psi_it - S_it + sat_prev)
        dir_vals = self._dirichlet_values(t_new)
        np.add.at(b, self.dir_cells, T_dir * dir_vals)
        neu_flux = np.zeros(g.n_cells)
        for f, cells, spec in self.neu_groups:
            q = _eval_data(spec, g.face_x[f], g.face_y[f], t_new)
            np.add.at(b, cells, g.face_area[f] * q)
            np.add.at(neu_flux, cells, g.face_area[f] * q)
        aux = dict(S_it=S_it, dS_it=dS_it, k_cell=k_cell, T=T, src=src,
                   dir_vals=dir_vals, neu_total=float(np.sum(neu_flux)))
        return A, b, aux

    def _solve(self, A, b, psi_it, step, iteration):
        if self.config.linear_solver == "cg":
            from scipy.sparse.linalg import cg
            try:
                x, info = cg(A, b, x0=psi_it, rtol=1e-12, atol=0.0)
            except TypeError:  # older scipy spells the kwarg tol
                x, info = cg(A, b, x0=psi_it, tol=1e-12, atol=0.0)
            if info != 0:
                raise StepFailureError("iterative linear solve failed",
                                       step=step, iteration=iteration)
        else:
            try:
                x = splu(A.tocsc()).solve(b)
            except RuntimeError as exc:
                raise StepFailureError(f"linear solve failed: {exc}",
                                       step=step, iteration=iteration) from exc
        # SuperLU can factor an exactly singular system through a roundoff
        # pivot and hand back finite garbage; a solve that cannot reproduce b
        # is a failure regardless of how it was obtained
        resid = np.max(np.abs(A @ x - b))
        if not resid <= 1e-7 * max(1.0, float(np.max(np.abs(b)))):
            raise StepFailureError(
                f"linear solve residual {resid:.3e} out of tolerance",
                step=step, iteration=iteration)
        return x

    def balance(self, sat_prev, psi_new, psi_it_final, aux) -> BalanceReport:
        """Audit of the step's own conservative bookkeeping.

        ``aux`` is the auxiliary dict of the assembly linearized at
        ``psi_it_final``, so the audit uses exactly the coefficients the
        accepted solve used.
        """
        dt = self.config.dt
        S_lin = aux["S_it"] + aux["dS_it"] * (psi_new - psi_it_final)
        storage_rate = float(np.sum(
            self.sigma_st * (S_lin - sat_prev) * self.vol)) / dt
        source_rate = float(np.sum(aux["src"] * self.vol))
        outflow = -aux["neu_total"]
        if self.dir_faces.size:
            outflow += float(np.sum(
                aux["T"][self.dir_faces]
                * (psi_new[self.dir_cells] - aux["dir_vals"])))
        residual = storage_rate - source_rate + outflow
        scale = max(abs(storage_rate), abs(source_rate), abs(outflow))
        relative = abs(residual) / scale if scale > 1e-14 else abs(residual)
        return BalanceReport(storage_rate=storage_rate,
                             source_rate=source_rate,
                             boundary_outflow=outflow, residual=residual,
                             relative=relative)


def assemble_system(state_prev: StateField, psi_iterate, config,
                    disc: Discretization | None = None):
    """Sparse linearized system for one Picard iterate (public wrapper)."""
    if disc is None:
        disc = Discretization(config)
    state_prev.require_finite("previous state")
    psi_it = psi_iterate.psi if isinstance(psi_iterate, StateField) \
        else np.asarray(psi_iterate, dtype=float)
    if not np.all(np.isfinite(psi_it)):
        raise StepFailureError("non-finite Picard iterate")
    sat_prev = state_prev.saturation
    if sat_prev is None:
        sat_prev = disc.saturation_of(state_prev.psi)
    A, b, _ = disc.assemble(sat_prev, psi_it, state_prev.time + config.dt)
    return A, b


def picard_solve(state_prev: StateField, config,
                 disc: Discretization | None = None,
                 step_index: int = 0) -> StateField:
    """One implicit Euler step: modified Picard until the head update is small.

    Convergence is the max-norm of the update against ``picard_tol``; an
    iterate whose linear residual is already at solver accuracy (relative
    ``linear_tol``) is accepted without another solve, so linear problems
    cost exactly one solve and an equilibrium state costs none.  Raises
    StepFailureError after ``picard_max_iters`` unconverged iterations,
    carrying the update history.
    """
    if disc is None:
        disc = Discretization(config)
    state_prev.require_finite("previous state")
    sat_prev = state_prev.saturation
    if sat_prev is None:
        sat_prev = disc.saturation_of(state_prev.psi)
    t_new = state_prev.time + config.dt
    psi_it = state_prev.psi.copy()
    history = []
    update = 0.0
    accepted = None
    for it in range(config.picard_max_iters):
        A, b, aux = disc.assemble(sat_prev, psi_it, t_new)
        resid = float(np.max(np.abs(A @ psi_it - b)))
        resid_scale = max(1.0, float(np.max(np.abs(b))))
        if resid <= config.linear_tol * resid_scale:
            # already a fixed point of its own linearization: no solve needed
            accepted = (psi_it, psi_it, aux, it, resid)
            break
        psi_new = disc._solve(A, b, psi_it, step_index, it)
        if not np.all(np.isfinite(psi_new)):
            raise StepFailureError("non-finite head after linear solve",
                                   step=step_index, time=t_new, iteration=it,
                                   history=history)
        update = float(np.max(np.abs(psi_new - psi_it)))
        history.append((resid, update))
        if update <= config.picard_tol:
            accepted = (psi_new, psi_it, aux, it + 1, resid)
            break
        psi_it = psi_new
    if accepted is None:
        raise StepFailureError(
            f"Picard did not converge within {config.picard_max_iters} "
            f"iterations (last update {update:.3e})",
            step=step_index, time=t_new, history=history)
    psi_acc, psi_lin, aux, iterations, resid = accepted

    # the audit runs against the system the accepted solve actually used
    balance = disc.balance(sat_prev, psi_acc, psi_lin, aux)
    state = StateField(psi=psi_acc, time=t_new,
                       saturation=disc.saturation_of(psi_acc),
                       conductivity=disc.conductivity_of(psi_acc))
    state.require_finite("accepted state")
    state.report = StepReport(step=step_index, time=t_new,
                              iterations=iterations, update_norm=update,
                              residual_norm=resid, balance=balance)
    return state


def run_simulation(config: SimulationConfig,
                   disc: Discretization | None = None,
                   progress=None) -> TimeSeries:
    """All time steps from the initial state; deterministic given config."""
    if disc is None:
        disc = Discretization(config)
    start = _time.perf_counter()
    state = disc.initial_state()
    states = [state]
    reports = []
    for k in range(config.n_steps):
        state = picard_solve(state, config, disc=disc, step_index=k + 1)
        states.append(state)
        reports.append(state.report)
        if progress is not None:
            progress(state.report)
    series = TimeSeries(states=states, reports=reports,
                        wall_time=_time.perf_counter() - start)
    series.validate(config.end_time, config.dt)
    return series


def face_fluxes(state: StateField, config,
                disc: Discretization | None = None) -> np.ndarray:
    """Flux through every face, oriented owner -> neighbor (outward at the
    boundary), evaluated at the state's own conductivities."""
    if disc is None:
        disc = Discretization(config)
    g = disc.grid
    k_cell = disc.conductivity_of(state.psi)
    T = face_transmissibilities(g, k_cell)
    flux = np.zeros(g.n_faces)
    ii = disc.if_idx
    flux[ii] = T[ii] * (state.psi[disc.if_own] - state.psi[disc.if_nbr])
    if disc.dir_faces.size:
        vals = disc._dirichlet_values(state.time)
        flux[disc.dir_faces] = T[disc.dir_faces] * (
            state.psi[disc.dir_cells] - vals)
    for f, cells, spec in disc.neu_groups:
        q = _eval_data(spec, g.face_x[f], g.face_y[f], state.time)
        flux[f] = -g.face_area[f] * q
    return flux
