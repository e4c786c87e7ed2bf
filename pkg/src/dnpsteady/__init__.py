"""Steady states and Rothe stepping for doubly nonlinear diffusion problems
with variable exponents and zero-flux boundaries.

The library discretizes scalar states on 1D intervals and triangulated
rectangles, minimizes the strictly convex perturbed energies with damped
Newton, drives the perturbation to zero by continuation, iterates the
monotone fixed-point map to extremal steady states, and advances the
parabolic problem implicitly one capacity solve per time step.
"""

from .discretization import (Mesh, assemble_energy_gradient, build_mesh,
                             constant_field, integrate, interval_mesh,
                             rectangle_mesh)
from .flux_ops import (FluxOperator, check_structure, eval_flux_and_potential,
                       max_exponent_callable, maxform_operator,
                       multiphase_operator)
from .rothe import Trajectory, rothe_evolve, rothe_step
from .solver import (GammaStudy, SolveReport, SolverOptions, apply_K,
                     gamma_convergence_study, solve_auxiliary, solve_perturbed)
from .sources import (SourceSystem, allee_source, check_hypotheses,
                      decay_source, eval_extended, logistic_source,
                      make_source, signomial_source, symmetric_sine_source,
                      truncate_source)
from .steady_state import (IterationTrace, compute_extremal_solutions,
                           constant_solution_analysis, fixed_point_iterate,
                           monotone_iterate, symmetry_double,
                           uniqueness_diagnostics, verify_solution)
from .varexp_core import (ExponentField, check_modular_relations,
                          luxemburg_norm, modular, sobolev_modular)

__version__ = "0.1.0"

__all__ = [
    "Mesh", "build_mesh", "interval_mesh", "rectangle_mesh",
    "constant_field", "integrate", "assemble_energy_gradient",
    "ExponentField", "modular", "luxemburg_norm", "sobolev_modular",
    "check_modular_relations",
    "FluxOperator", "multiphase_operator", "maxform_operator",
    "eval_flux_and_potential", "check_structure", "max_exponent_callable",
    "SourceSystem", "make_source", "signomial_source", "truncate_source",
    "eval_extended", "check_hypotheses", "logistic_source", "allee_source",
    "decay_source", "symmetric_sine_source",
    "SolverOptions", "SolveReport", "solve_perturbed", "solve_auxiliary",
    "apply_K", "gamma_convergence_study", "GammaStudy",
    "IterationTrace", "monotone_iterate", "fixed_point_iterate",
    "compute_extremal_solutions", "verify_solution",
    "constant_solution_analysis", "uniqueness_diagnostics", "symmetry_double",
    "Trajectory", "rothe_step", "rothe_evolve",
]
