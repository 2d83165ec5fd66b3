"""Thin elastic sheet floating on a liquid and lifted at one end.

Modules:

* ``model``: physical and dimensionless constants, scaling-regime checks
* ``curve``: parametrized polylines and the constructive curve transforms
* ``laplace_young``: meniscus profiles and the boundary energy ``phi``
* ``energy``: discrete functionals and the contact-kink window
* ``solver``: the semi-analytic limit solution and thickness-``h`` minimization
* ``gamma_harness``: recovery sequences and thickness sweeps
* ``cli``: scenario-driven command line
"""

from .curve import ParamCurve, isometrize, mollify, monotone_rearrange
from .energy import (
    Configuration,
    EnergyBreakdown,
    energy_full,
    energy_h,
    energy_limit,
    kink_analysis,
)
from .gamma_harness import gamma_convergence_experiment, recovery_sequence
from .laplace_young import critical_height, phi, solve_graph
from .model import (
    DimensionlessParams,
    LimitConstants,
    PhysicalParams,
    nondimensionalize,
)
from .solver import LimitSolution, SolveOptions, minimize_energy_h, solve_limit_problem

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "DimensionlessParams",
    "EnergyBreakdown",
    "LimitConstants",
    "LimitSolution",
    "ParamCurve",
    "PhysicalParams",
    "SolveOptions",
    "critical_height",
    "energy_full",
    "energy_h",
    "energy_limit",
    "gamma_convergence_experiment",
    "isometrize",
    "kink_analysis",
    "minimize_energy_h",
    "mollify",
    "monotone_rearrange",
    "nondimensionalize",
    "phi",
    "recovery_sequence",
    "solve_graph",
    "solve_limit_problem",
]
