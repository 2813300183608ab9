"""Spectral Galerkin toolkit for reaction-diffusion equations with nonlocal diffusion

    u_t - a(|u|^2_{H^1_0}) u_xx = f(u) + h   on (0, L),   u = 0 at x = 0, L.
"""

from .basis import SpectralBasis, SpectralState, build_basis, norms
from .diagnostics import EnergyReport, EstimateMonitor, energy, linf_bound_constant
from .equilibria import (Equilibrium, EquilibriumSet, SearchPlan, find_all, newton_solve,
                         stationary_jacobian, stationary_residual)
from .flow import FlowConfig, Trajectory, continuous_dependence, integrate, rescale_time
from .graph import ConnectionGraph, build_graph, shoot, unstable_seeds, verify_structure
from .model import BlowUpError
from .problems import (AssumptionError, DiffusionModulator, Forcing, ProblemSpec, ReactionTerm,
                       chafee_infante, dissipativity_constants, validate_assumptions)

__all__ = [
    "AssumptionError", "BlowUpError", "ConnectionGraph", "DiffusionModulator", "EnergyReport",
    "Equilibrium", "EquilibriumSet", "EstimateMonitor", "FlowConfig", "Forcing", "ProblemSpec",
    "ReactionTerm", "SearchPlan", "SpectralBasis", "SpectralState", "Trajectory", "build_basis",
    "build_graph", "chafee_infante", "continuous_dependence", "dissipativity_constants", "energy",
    "find_all", "integrate", "linf_bound_constant", "newton_solve", "norms", "rescale_time", "shoot",
    "stationary_jacobian", "stationary_residual", "unstable_seeds", "validate_assumptions",
    "verify_structure",
]
