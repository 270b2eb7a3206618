"""Numerical laboratory for the linear and nonlinear stability of Couette flow
in a stratified (Boussinesq) channel with non-slip walls."""
from .errors import ConfigError, CouetteLabError, NumericalError, WindowNotFound
from .ledger import EnergyLedger, audit_bootstrap, main_estimate_check
from .nonlinear import ChannelState, RunConfig, compute_fluxes, run, step
from .operators import FluidParams, assemble_mode_operator, compatibility_projection, velocity_from_vorticity
from .resolvent import gearhart_pruss_gap, lemma24_ratios, solve_resolvent, sweep_resolvent
from .semigroup import evolve_linear, fit_enhanced_dissipation, spacetime_norm
from .spectral import ChebGrid, ModeField, build_grid, hminus1_norm, solve_helmholtz, weighted_l2_norm

__all__ = [
    "ChannelState", "ChebGrid", "ConfigError", "CouetteLabError", "EnergyLedger", "FluidParams",
    "ModeField", "NumericalError", "RunConfig", "WindowNotFound", "assemble_mode_operator",
    "audit_bootstrap", "build_grid", "compatibility_projection", "compute_fluxes", "evolve_linear",
    "fit_enhanced_dissipation", "gearhart_pruss_gap", "hminus1_norm", "lemma24_ratios",
    "main_estimate_check", "run", "solve_helmholtz", "solve_resolvent", "spacetime_norm", "step",
    "sweep_resolvent", "velocity_from_vorticity", "weighted_l2_norm",
]
