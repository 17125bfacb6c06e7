"""Hierarchical-equations-of-motion simulator for finite-time Landau-Zener
sweeps of a qubit coupled to a Lorentzian zero-temperature bath, with
counter-diabatic and dynamical-decoupling protocols and a pseudomode
cross-check."""

from .bath import BathSpec, correlation, decompose
from .config import ConfigError, RunConfig, parse_config, parse_grid
from .heom import (
    ConvergenceError,
    NumericalFailure,
    SimulationConfig,
    StabilityWarning,
    auto_converge,
    build_hierarchy,
    evolve,
)
from .observables import FidelityTrace, find_extrema, survival_fidelity
from .protocols import BiasSchedule, Mode, ProtocolSpec, ScheduleKind
from .pseudomode import PseudomodeConfig, evolve_pseudomode

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "BiasSchedule", "ConfigError", "ConvergenceError", "FidelityTrace",
    "Mode", "NumericalFailure", "ProtocolSpec", "PseudomodeConfig", "RunConfig",
    "ScheduleKind", "SimulationConfig", "StabilityWarning", "auto_converge",
    "build_hierarchy", "correlation", "decompose", "evolve", "evolve_pseudomode",
    "find_extrema", "parse_config", "parse_grid", "survival_fidelity",
]
