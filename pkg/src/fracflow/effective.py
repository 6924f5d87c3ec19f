"""Width-zero interface limits of the two-block flow problem.

When the fracture width goes to zero with storage scaling like
width**porosity_exp and conductivity like width**conductivity_exp, the
fracture collapses to the interface line and what survives of it depends
only on the two exponents:

* storage survives exactly when porosity_exp == -1 (larger exponents kill
  it, smaller ones are not covered);
* conductivity_exp == -1 leaves finite along-interface conduction,
  conductivity_exp < -1 makes the interface infinitely conductive (its
  head becomes spatially constant), and conductivity_exp in (-1, 1) makes
  the interface transparent so the blocks are in perfect contact.
  conductivity_exp >= 1 would be an impermeable wall and is not covered.

The five supported combinations are solved monolithically: matrix cells
keep the plain finite-volume rows, interface unknowns (per interface row,
or one scalar, or none) are appended after the matrix cells, and each
matrix cell touching the interface couples to its interface unknown
through a half-cell transmissibility.  The net matrix-to-interface flux
never appears explicitly in the solve; ``jump_flux`` recomputes it from a
solved state as a diagnostic.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .fullmodel import (
    Discretization,
    StateField,
    StepFailureError,
    TimeSeries,
    _resolve_per_subdomain,
    run_simulation,
)
from .mesh import ScalingRegime, UnsupportedRegimeError


class EffectiveVariant(Enum):
    """What remains of the fracture in the zero-width limit."""

    FRACTURE_RICHARDS = "fracture-richards"    # storage + 1-D conduction
    FRACTURE_ELLIPTIC = "fracture-elliptic"    # 1-D conduction only
    FRACTURE_ODE = "fracture-ode"              # storage, head constant in y
    FLUX_CONSTRAINT = "flux-constraint"        # head constant, zero net flux
    CONTINUOUS = "continuous"                  # blocks in perfect contact


def select_variant(regime: ScalingRegime) -> EffectiveVariant:
    """Limit model for the regime's two scaling exponents."""
    por, cond = regime.porosity_exp, regime.conductivity_exp
    if por < -1.0:
        raise UnsupportedRegimeError(
            f"porosity exponent {por} < -1: fracture storage would blow up")
    if cond >= 1.0:
        raise UnsupportedRegimeError(
            f"conductivity exponent {cond} >= 1: fracture acts as an "
            "impermeable wall")
    storage = por == -1.0
    if cond == -1.0:
        return (EffectiveVariant.FRACTURE_RICHARDS if storage
                else EffectiveVariant.FRACTURE_ELLIPTIC)
    if cond < -1.0:
        return (EffectiveVariant.FRACTURE_ODE if storage
                else EffectiveVariant.FLUX_CONSTRAINT)
    if storage:
        raise UnsupportedRegimeError(
            f"storage-preserving regime with conductivity exponent {cond} in "
            "(-1, 1) has no limit model")
    return EffectiveVariant.CONTINUOUS


@dataclass
class InterfaceField:
    """Interface head at one time: per-row values, one scalar, or absent."""

    values: np.ndarray | None
    time: float


@dataclass
class InterfaceReport:
    """Per-step interface diagnostics at the accepted state."""

    time: float
    net_inflow: float                       # integral of jump_flux over y
    constraint_residual: float | None = None   # |net inflow|, constraint model
    budget_residual: float | None = None       # storage rate vs net inflow


@dataclass
class InterfaceSeries:
    fields: list
    reports: list


def _reduced(config):
    if config.regime.reduced:
        return config
    r = config.regime
    return dataclasses.replace(
        config, regime=ScalingRegime(width_ratio=0.0,
                                     porosity_exp=r.porosity_exp,
                                     conductivity_exp=r.conductivity_exp))


class EffectiveDiscretization:
    """Matrix discretization plus the variant's interface unknowns.

    Presents the same assemble/solve/balance surface as ``Discretization``
    so the standard Picard and time loops drive the coupled system
    unchanged.  Unknown ordering: matrix cells first (grid order), then
    the interface values.
    """

    def __init__(self, config, variant: EffectiveVariant):
        if variant is EffectiveVariant.CONTINUOUS:
            raise ValueError("the perfect-contact model has no interface "
                             "unknowns; use a plain welded discretization")
        config = _reduced(config)
        self.config = config
        self.variant = variant
        self.base = Discretization(config, include_gamma=False)
        g = self.base.grid
        self.cell1 = g.gamma_m1
        self.cell2 = g.gamma_m2
        self.seg = g.interface_dy
        self.node_y = g.interface_y
        if np.any(np.diff(self.node_y) <= 0.0):
            raise ValueError("interface rows must be sorted in y")
        self.n_m = g.n_cells
        self.distributed = variant in (EffectiveVariant.FRACTURE_RICHARDS,
                                       EffectiveVariant.FRACTURE_ELLIPTIC)
        self.has_storage = variant in (EffectiveVariant.FRACTURE_RICHARDS,
                                       EffectiveVariant.FRACTURE_ODE)
        self.n_f = self.seg.size if self.distributed else 1
        self.n = self.n_m + self.n_f
        self.f_vol = (self.seg.copy() if self.distributed
                      else np.array([float(np.sum(self.seg))]))
        self.storage_coeff = (config.storage_ratio_value if self.has_storage
                              else 0.0)
        self.cond_coeff = config.conductivity_ratio_value
        # interface endpoint condition only matters when the head varies in y
        self.clamped_ends = (self.distributed
                             and config.fracture_ends == "dirichlet")

        # coupling geometry: half-cell distance on each side of the interface
        self.w1 = self.seg / (0.5 * g.cell_dx[self.cell1])
        self.w2 = self.seg / (0.5 * g.cell_dx[self.cell2])
        self.col = (self.n_m + np.arange(self.n_f) if self.distributed
                    else np.full(self.seg.size, self.n_m))

        init = _resolve_per_subdomain(config.initial_head, ["f"],
                                      require_all=True)["f"]
        if callable(init):
            vals = np.broadcast_to(
                np.asarray(init(np.zeros_like(self.node_y), self.node_y),
                           dtype=float), self.node_y.shape)
        else:
            vals = np.full(self.node_y.shape, float(init))
        self.f_init = (vals.copy() if self.distributed
                       else np.array([float(np.sum(vals * self.seg)
                                            / np.sum(self.seg))]))

        # balance audit weights over the extended unknown vector
        self.vol = np.concatenate([self.base.vol, self.f_vol])
        self.sigma_st = np.concatenate(
            [self.base.sigma_st, np.full(self.n_f, self.storage_coeff)])

    @property
    def grid(self):
        return self.base.grid

    # -- extended material fields ---------------------------------------------

    def saturation_of(self, psi):
        out = np.empty_like(psi)
        out[:self.n_m] = self.base.saturation_of(psi[:self.n_m])
        out[self.n_m:] = self.config.fracture_material.saturation(
            psi[self.n_m:])
        return out

    def d_saturation_of(self, psi):
        out = np.empty_like(psi)
        out[:self.n_m] = self.base.d_saturation_of(psi[:self.n_m])
        out[self.n_m:] = self.config.fracture_material.d_saturation(
            psi[self.n_m:])
        return out

    def conductivity_of(self, psi):
        out = np.empty_like(psi)
        out[:self.n_m] = self.base.conductivity_of(psi[:self.n_m])
        out[self.n_m:] = self.cond_coeff * \
            self.config.fracture_material.rel_conductivity(
                psi=psi[self.n_m:])
        return out

    def initial_state(self) -> StateField:
        base_state = self.base.initial_state()
        psi = np.concatenate([base_state.psi, self.f_init])
        state = StateField(psi=psi, time=0.0,
                           saturation=self.saturation_of(psi),
                           conductivity=self.conductivity_of(psi))
        state.require_finite("initial state")
        return state

    # -- coupled assembly -------------------------------------------------------

    def assemble(self, sat_prev, psi_it, t_new):
        n_m, n_f = self.n_m, self.n_f
        dt = self.config.dt
        A_m, b_m, aux = self.base.assemble(sat_prev[:n_m], psi_it[:n_m],
                                           t_new)
        k_cell = aux["k_cell"]
        T1 = self.w1 * k_cell[self.cell1]
        T2 = self.w2 * k_cell[self.cell2]
        if not np.sum(T1) + np.sum(T2) > 0.0:
            raise StepFailureError(
                "all interface transmissibilities vanish: the interface "
                "row is singular")

        col = self.col
        rows = [self.cell1, self.cell2, self.cell1, self.cell2,
                col, col, col]
        cols = [self.cell1, self.cell2, col, col,
                self.cell1, self.cell2, col]
        data = [T1, T2, -T1, -T2, -T1, -T2, T1 + T2]

        psi_f = psi_it[n_m:]
        Sf = self.config.fracture_material.saturation(psi_f)
        dSf = self.config.fracture_material.d_saturation(psi_f)
        b_f = np.zeros(n_f)
        if self.has_storage:
            st = self.storage_coeff * self.f_vol / dt
            fdof = n_m + np.arange(n_f)
            rows.append(fdof)
            cols.append(fdof)
            data.append(st * dSf)
            b_f += st * (dSf * psi_f - Sf + sat_prev[n_m:])
        end_T = None
        if self.distributed:
            kf = self.cond_coeff * \
                self.config.fracture_material.rel_conductivity(psi=psi_f)
            if n_f > 1:
                d = 0.5 * self.seg
                Tf = 1.0 / (d[:-1] / kf[:-1] + d[1:] / kf[1:])
                lo = n_m + np.arange(n_f - 1)
                hi = lo + 1
                rows += [lo, hi, lo, hi]
                cols += [lo, hi, hi, lo]
                data += [Tf, Tf, -Tf, -Tf]
            if self.clamped_ends:
                end_T = (kf[0] / (0.5 * self.seg[0]),
                         kf[-1] / (0.5 * self.seg[-1]))
                ends = np.array([n_m, n_m + n_f - 1])
                rows.append(ends)
                cols.append(ends)
                data.append(np.array(end_T))
                # clamped head is zero, so nothing enters the rhs

        Am = A_m.tocoo()
        A = sp.coo_matrix(
            (np.concatenate([Am.data] + data),
             (np.concatenate([Am.row] + rows),
              np.concatenate([Am.col] + cols))),
            shape=(self.n, self.n)).tocsr()
        b = np.concatenate([b_m, b_f])
        aux = dict(aux)
        aux["S_it"] = np.concatenate([aux["S_it"], Sf])
        aux["dS_it"] = np.concatenate([aux["dS_it"], dSf])
        aux["src"] = np.concatenate([aux["src"], np.zeros(n_f)])
        aux["end_T"] = end_T
        return A, b, aux

    def _solve(self, A, b, psi_it, step, iteration):
        return Discretization._solve(self, A, b, psi_it, step, iteration)

    def balance(self, sat_prev, psi_new, psi_it_final, aux):
        rep = Discretization.balance(self, sat_prev, psi_new, psi_it_final,
                                     aux)
        if aux["end_T"] is None:
            return rep
        e0, e1 = aux["end_T"]
        outflow = rep.boundary_outflow + e0 * psi_new[self.n_m] \
            + e1 * psi_new[-1]
        residual = rep.storage_rate - rep.source_rate + outflow
        scale = max(abs(rep.storage_rate), abs(rep.source_rate), abs(outflow))
        return dataclasses.replace(
            rep, boundary_outflow=outflow, residual=residual,
            relative=abs(residual) / scale if scale > 1e-14 else abs(residual))

    # base balance indexes these through aux["T"] and psi_new
    @property
    def dir_faces(self):
        return self.base.dir_faces

    @property
    def dir_cells(self):
        return self.base.dir_cells


def jump_flux(matrix_state: StateField, interface: InterfaceField | None,
              config, disc: Discretization | None = None) -> np.ndarray:
    """Net flux per unit interface length from both blocks into each
    interface row.

    ``interface`` may hold per-row values, a single scalar, or be None
    (perfect contact), in which case the interface head is reconstructed
    as the transmissibility-weighted trace of the two adjacent cells.
    """
    if disc is None:
        disc = Discretization(_reduced(config), include_gamma=False)
    g = disc.grid
    psi = matrix_state.psi
    k = config.matrix_material.rel_conductivity(psi=psi)
    T1 = g.interface_dy * k[g.gamma_m1] / (0.5 * g.cell_dx[g.gamma_m1])
    T2 = g.interface_dy * k[g.gamma_m2] / (0.5 * g.cell_dx[g.gamma_m2])
    p1 = psi[g.gamma_m1]
    p2 = psi[g.gamma_m2]
    if interface is None or interface.values is None:
        trace = (T1 * p1 + T2 * p2) / (T1 + T2)
    else:
        trace = np.broadcast_to(interface.values, g.interface_y.shape)
    return (T1 * (p1 - trace) + T2 * (p2 - trace)) / g.interface_dy


def interface_trace(matrix_state: StateField, config,
                    disc: Discretization | None = None) -> np.ndarray:
    """Transmissibility-weighted interface head of a perfect-contact run."""
    if disc is None:
        disc = Discretization(_reduced(config), include_gamma=True)
    g = disc.grid
    psi = matrix_state.psi
    k = config.matrix_material.rel_conductivity(psi=psi)
    T1 = k[g.gamma_m1] / g.cell_dx[g.gamma_m1]
    T2 = k[g.gamma_m2] / g.cell_dx[g.gamma_m2]
    return (T1 * psi[g.gamma_m1] + T2 * psi[g.gamma_m2]) / (T1 + T2)


def _split_state(state: StateField, n_m: int):
    def head(a):
        return None if a is None else a[:n_m]

    mstate = StateField(psi=state.psi[:n_m], time=state.time,
                        saturation=head(state.saturation),
                        conductivity=head(state.conductivity),
                        report=state.report)
    return mstate, InterfaceField(values=state.psi[n_m:].copy(),
                                  time=state.time)


def run_effective(config, variant: EffectiveVariant | None = None,
                  progress=None):
    """Solve the limit model on the reduced layout.

    Returns (matrix TimeSeries, InterfaceSeries).  The variant defaults to
    the one selected by the config's scaling exponents; passing a
    different one is rejected.
    """
    cfg = _reduced(config)
    auto = select_variant(cfg.regime)
    if variant is None:
        variant = auto
    elif variant is not auto:
        raise ValueError(f"variant {variant.value} does not match the "
                         f"regime's limit model {auto.value}")

    if variant is EffectiveVariant.CONTINUOUS:
        disc = Discretization(cfg, include_gamma=True)
        series = run_simulation(cfg, disc=disc, progress=progress)
        fields = [InterfaceField(values=None, time=s.time)
                  for s in series.states]
        return series, InterfaceSeries(fields=fields, reports=[])

    edisc = EffectiveDiscretization(cfg, variant)
    ext = run_simulation(cfg, disc=edisc, progress=progress)

    mstates, ifields = [], []
    for s in ext.states:
        m, f = _split_state(s, edisc.n_m)
        mstates.append(m)
        ifields.append(f)
    seg = edisc.seg
    cphi = cfg.storage_ratio_value
    gamma_len = float(np.sum(seg))
    fmat = cfg.fracture_material
    ireports = []
    for k in range(1, len(ifields)):
        jump = jump_flux(mstates[k], ifields[k], cfg, disc=edisc.base)
        net = float(np.sum(jump * seg))
        constraint = (abs(net)
                      if variant is EffectiveVariant.FLUX_CONSTRAINT
                      else None)
        budget = None
        if variant is EffectiveVariant.FRACTURE_ODE:
            ds = float(fmat.saturation(ifields[k].values)[0]
                       - fmat.saturation(ifields[k - 1].values)[0])
            budget = abs(cphi * ds * gamma_len / cfg.dt - net)
        ireports.append(InterfaceReport(time=ifields[k].time, net_inflow=net,
                                        constraint_residual=constraint,
                                        budget_residual=budget))
    matrix_series = TimeSeries(states=mstates, reports=ext.reports,
                               wall_time=ext.wall_time)
    return matrix_series, InterfaceSeries(fields=ifields, reports=ireports)
