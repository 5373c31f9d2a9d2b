"""Quasistatic cohesive-fracture solver with fatigue on a prescribed crack line."""

from .laws import CohesiveLaw, LawField
from .mesh import DomainSpec, Mesh, StiffnessSystem, build_mesh, assemble_stiffness, dirichlet_lift
from .reduced import ReducedModel, condense, reduced_energy, traction, reconstruct_bulk
from .stepsolve import (SolverOptions, StepProblem, StepSolution, StepNonConvergence,
                        solve_coordinate_1d, solve_step, stationarity_residual)
from .evolution import (EnergyAudit, EvolutionAborted, InitialNotStable, InitialState,
                        LoadProgram, Trajectory, discrete_variation, eta_bound, run)
from .oracle import GridSpec, FatigueResult, brute_force_step, scalar_fatigue_recursion
from .verifier import (AuditReport, CheckResult, audit_trajectory, check_energy_balance,
                       check_flow_rule, check_global_stability, check_irreversibility,
                       check_kkt, refinement_study)
from .scenario import ConfigError, Scenario, parse_config, shipped_scenario_names, shipped_scenario_path

__version__ = "0.1.0"
