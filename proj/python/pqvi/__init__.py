"""Solvers for parabolic quasi-variational inequalities."""

from ._core import (
    EXIT_CHECK,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SOLVER,
    PqviError,
    TimeGrid,
    p_laplacian,
    project_gradient_ball,
    run,
    scalar_feedback,
    scalar_qvi,
    solve_obstacle,
    verify,
)

__all__ = [
    "EXIT_CHECK",
    "EXIT_CONFIG",
    "EXIT_OK",
    "EXIT_SOLVER",
    "PqviError",
    "TimeGrid",
    "p_laplacian",
    "project_gradient_ball",
    "run",
    "scalar_feedback",
    "scalar_qvi",
    "solve_obstacle",
    "verify",
]
