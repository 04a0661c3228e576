"""Steady supersonic Euler-Poisson flows in two-dimensional convergent nozzles.

Library layout:
    core          grids, cosine basis, quadrature, discrete Sobolev norms
    background    radial supersonic background ODE and admissibility checks
    coefficients  linearized coefficient profiles and frozen-state fields
    multiplier    Riccati energy multiplier (tan/cot closed forms)
    spectral      cosine-Galerkin reduction and the sparse linear solver
    potentials    divergence potential, velocity shift, curl potential
    transport     density law, stream function, scalar transport
    iteration     inner/outer fixed-point maps and the full nonlinear solve
    residuals     full-system residual verification harness
    reports       CSV / key-value file formats
    cli           `nozzle-ep` command-line entry point
"""

from .background import (
    BackgroundSolution,
    integrate_background,
    positivity_weight,
    validate_inlet,
)
from .core import CosineBasis, GasConfig, Grid, InletState, NozzleGeometry
from .iteration import SolverOptions, solve_problem
from .state import BoundaryData, FlowState, PerturbationState

__all__ = [
    "BackgroundSolution",
    "BoundaryData",
    "CosineBasis",
    "FlowState",
    "GasConfig",
    "Grid",
    "InletState",
    "NozzleGeometry",
    "PerturbationState",
    "SolverOptions",
    "integrate_background",
    "positivity_weight",
    "solve_problem",
    "validate_inlet",
]

__version__ = "0.1.0"
