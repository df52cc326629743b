"""Minimizing-movement solver and verification harness for the clamped-plate
obstacle flow: per-step penalty and active-set solvers, trajectory
interpolants, and machine-checkable inequality reports."""

from .grid import (
    Grid,
    build_grid,
    bending_energy,
    bilaplacian,
    energy_and_gradient,
    extended_laplacian,
    laplacian_adjoint,
    l2_norm,
    weighted_norms,
)
from .problem import (
    BoundarySignError,
    NonFinite,
    ObstacleProblem,
    ObstacleViolation,
    build_problem,
)
from .step import (
    DescentViolation,
    NoConvergence,
    PenaltyRecord,
    StepConfig,
    StepResult,
    measure_mass,
    solve_step,
    solve_step_active_set,
    solve_step_penalty,
)
from .flow import (
    StepFailure,
    Trajectory,
    eval_interpolant,
    run_flow,
    trajectory_aggregates,
)
from .diagnostics import (
    CheckReport,
    HolderModuli,
    InfeasibleTestTrajectory,
    cauchy_difference,
    gradient_sup_quotient,
    holder_moduli,
    run_invariant_suite,
    solve_elliptic_obstacle,
    suite_passed,
    weak_form_residual,
)
from .config import ConfigError, RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "build_grid",
    "bending_energy",
    "bilaplacian",
    "energy_and_gradient",
    "extended_laplacian",
    "laplacian_adjoint",
    "l2_norm",
    "weighted_norms",
    "BoundarySignError",
    "NonFinite",
    "ObstacleProblem",
    "ObstacleViolation",
    "build_problem",
    "DescentViolation",
    "NoConvergence",
    "PenaltyRecord",
    "StepConfig",
    "StepResult",
    "measure_mass",
    "solve_step",
    "solve_step_active_set",
    "solve_step_penalty",
    "StepFailure",
    "Trajectory",
    "eval_interpolant",
    "run_flow",
    "trajectory_aggregates",
    "CheckReport",
    "HolderModuli",
    "InfeasibleTestTrajectory",
    "cauchy_difference",
    "gradient_sup_quotient",
    "holder_moduli",
    "run_invariant_suite",
    "solve_elliptic_obstacle",
    "suite_passed",
    "weak_form_residual",
    "ConfigError",
    "RunConfig",
    "parse_config",
]
