"""Finite-volume simulation of unsaturated flow through a fractured layer.

The package solves a dimensionless Richards problem on a vertical strip of
porous medium cut by a thin fracture, both with the fracture fully resolved
at a finite width ratio and with a family of reduced models in which the
fracture collapses onto an interface.  A sweep over the width ratio checks
that the resolved solutions converge to the reduced one.
"""

from fracflow.constitutive import (
    FRACTURE_SOIL,
    MATRIX_SOIL,
    BoundsReport,
    LinearModel,
    TableRangeError,
    VanGenuchtenModel,
    VanGenuchtenParams,
)
from fracflow.effective import (
    EffectiveVariant,
    InterfaceField,
    InterfaceReport,
    InterfaceSeries,
    interface_trace,
    jump_flux,
    run_effective,
    select_variant,
)
from fracflow.fullmodel import (
    BalanceReport,
    BoundaryCondition,
    Discretization,
    ReferenceScales,
    SimulationConfig,
    StateField,
    StepFailureError,
    StepReport,
    TimeSeries,
    face_fluxes,
    nondimensionalize,
    picard_solve,
    run_simulation,
)
from fracflow.mesh import (
    DomainLayout,
    Grid,
    ScalingRegime,
    UnsupportedRegimeError,
    build_geometry,
    build_grid,
    default_fracture_nx,
)
from fracflow.upscale import (
    ConvergenceTable,
    SweepRow,
    epsilon_sweep,
    l2_error,
    table_to_csv,
    transversal_flatness,
    x_average,
    y_average,
)

__version__ = "0.1.0"

__all__ = [
    "FRACTURE_SOIL",
    "MATRIX_SOIL",
    "BalanceReport",
    "BoundaryCondition",
    "BoundsReport",
    "ConvergenceTable",
    "Discretization",
    "DomainLayout",
    "EffectiveVariant",
    "Grid",
    "InterfaceField",
    "InterfaceReport",
    "InterfaceSeries",
    "LinearModel",
    "ReferenceScales",
    "ScalingRegime",
    "SimulationConfig",
    "StateField",
    "StepFailureError",
    "StepReport",
    "SweepRow",
    "TableRangeError",
    "TimeSeries",
    "UnsupportedRegimeError",
    "VanGenuchtenModel",
    "VanGenuchtenParams",
    "build_geometry",
    "build_grid",
    "default_fracture_nx",
    "epsilon_sweep",
    "face_fluxes",
    "interface_trace",
    "jump_flux",
    "l2_error",
    "nondimensionalize",
    "picard_solve",
    "run_effective",
    "run_simulation",
    "select_variant",
    "table_to_csv",
    "transversal_flatness",
    "x_average",
    "y_average",
    "__version__",
]
