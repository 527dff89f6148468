"""Radial method-of-lines solver for both frames with diagnostics."""

from .diagnostics import (COLUMNS, DiagnosticsSeries, FitReport, InsufficientData,
                          config_hash, fit_exponents, fit_power_law, fit_rate,
                          perturbation_diagnostics, weighted_energy)
from .frames import FrameComparison, compare_frames, matched_states, selfsim_to_eulerian
from .operators import rhs_eulerian, rhs_selfsim
from .solver import Stepper, rho_origin, run, step
from .state import (RadialState, SimConfig, state_from_initial_data, state_from_profile,
                    uniform_grid)

__all__ = [
    "COLUMNS", "DiagnosticsSeries", "FitReport", "InsufficientData", "config_hash",
    "fit_exponents", "fit_power_law", "fit_rate", "perturbation_diagnostics",
    "weighted_energy", "FrameComparison", "compare_frames", "matched_states",
    "selfsim_to_eulerian", "rhs_eulerian", "rhs_selfsim", "Stepper", "rho_origin", "run",
    "step", "RadialState", "SimConfig", "state_from_initial_data", "state_from_profile",
    "uniform_grid",
]
