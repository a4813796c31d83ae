"""Traveling-wave profiles of degenerate advection-diffusion in a periodic
shear flow: Newton/continuation solver plus a verification harness for the
wave's proved structural properties (barriers, monotonicity, pinning,
oscillation decay, flux conservation, free boundary, far-field expansion,
uniqueness up to translation)."""

__version__ = "0.1.0"

from .flow import FlowProfile, WaveParams, make_flow, speed_bounds, validate_speed
from .planar import PlanarProfile, barrier_pair, profile_from_anchor, slope_law
from .fields import Grid, ScalarField2D, residual_phi, w_transform
from .solver import SolveReport, StageSpec, continuation, solve_truncated
from .analysis import (
    align_translates,
    expansion_fit,
    flux_invariant,
    free_boundary_extract,
    monotonicity_report,
    oscillation_profile,
    pin_translate,
)
from .verify import run_verification

__all__ = [
    "FlowProfile", "WaveParams", "make_flow", "speed_bounds", "validate_speed",
    "PlanarProfile", "barrier_pair", "profile_from_anchor", "slope_law",
    "Grid", "ScalarField2D", "residual_phi", "w_transform",
    "SolveReport", "StageSpec", "continuation", "solve_truncated",
    "pin_translate", "monotonicity_report", "flux_invariant",
    "oscillation_profile", "free_boundary_extract", "expansion_fit",
    "align_translates", "run_verification",
    "__version__",
]
