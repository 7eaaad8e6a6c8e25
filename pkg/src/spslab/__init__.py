"""Radial ground states of the Schrodinger-Poisson-Slater equation and a
laboratory for their zero-mass (small-coupling) asymptotics."""

__version__ = "0.1.0"

from .radial import (GridError, RadialFunction, RadialGrid, apply_laplacian,
                     cumulative_integral, derivative, grid_from_nodes,
                     integrate, lp_power, make_grid, resample)
from .coulomb import (CoulombPair, brute_force_coulomb, coulomb_energy,
                      newtonian_potential, potential_from_density)
from .functionals import (EnergyBreakdown, ManifoldError, ProblemParams,
                          breakdown, e_norm, energy, eps_exponent,
                          fiber_energy, fiber_project, m_functional,
                          manifold_energy, nehari, pohozaev_identity,
                          pohozaev_manifold, scale_breakdown)
from .solver import (ContinuationInit, FileInit, GaussianInit, SCFError,
                     Solution, SolverConfig, SolverError, ground_state,
                     load_solution, reconcile_candidates, save_solution,
                     scf_cross_check, solution_from_json, solution_to_json,
                     verify)
from .asymptotics import (DecayError, LimitProjection, LocalLimitReport,
                          LocalLimitRow, SweepReport, SweepRow, decay_rate,
                          e_distance, eps_of_lambda, lambda_of_eps,
                          local_limit_study, project_to_limit_manifold,
                          read_sweep_csv, rescale_u_to_v, rescale_v_to_u,
                          save_sweep, sweep, sweep_to_csv, sweep_to_json)

__all__ = [name for name in dir() if not name.startswith("_")]
