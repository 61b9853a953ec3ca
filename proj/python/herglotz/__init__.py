"""Solvers for contact (Herglotz) Lagrangian mechanics.

Expression-driven problem definitions, Herglotz and vakonomic integrators,
and the indirect solver for Herglotz optimal control problems. The heavy
lifting lives in the compiled extension module.
"""

from ._core import (
    BvpResult,
    ContactLagrangian,
    ControlProblem,
    DimensionMismatch,
    DiscretePath,
    Expr,
    ExprEvalError,
    ExprParseError,
    HerglotzError,
    HocpResult,
    MultiplierCurve,
    NewtonFailure,
    OdeFailure,
    ProblemFileError,
    SingularMatrixError,
    VakonomicProblem,
    action_z,
    constraint_drift,
    contact_action,
    contact_lagrangian,
    control_problem,
    control_rhs,
    extended_lagrangian,
    first_variation,
    herglotz_rhs,
    hocp_as_vakonomic,
    integrate_herglotz,
    integrate_vakonomic,
    multiplier_evolution,
    random_variation,
    solve_hocp,
    solve_vakonomic_bvp,
    stationarity_residual,
    stationarity_solve,
    vakonomic_problem,
    vakonomic_rhs,
)

__all__ = [
    "BvpResult",
    "ContactLagrangian",
    "ControlProblem",
    "DimensionMismatch",
    "DiscretePath",
    "Expr",
    "ExprEvalError",
    "ExprParseError",
    "HerglotzError",
    "HocpResult",
    "MultiplierCurve",
    "NewtonFailure",
    "OdeFailure",
    "ProblemFileError",
    "SingularMatrixError",
    "VakonomicProblem",
    "action_z",
    "constraint_drift",
    "contact_action",
    "contact_lagrangian",
    "control_problem",
    "control_rhs",
    "extended_lagrangian",
    "first_variation",
    "herglotz_rhs",
    "hocp_as_vakonomic",
    "integrate_herglotz",
    "integrate_vakonomic",
    "multiplier_evolution",
    "random_variation",
    "solve_hocp",
    "solve_vakonomic_bvp",
    "stationarity_residual",
    "stationarity_solve",
    "vakonomic_problem",
    "vakonomic_rhs",
]

__version__ = "0.1.0"
