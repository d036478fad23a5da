"""Finite-difference Fokker-Planck solvers for both feedback models."""

from mckv.solvers.entropy import EntropyKit, phi_bump
from mckv.solvers.fp_linear import LinearSolution, m_transform, solve_linear
from mckv.solvers.fp_log import LogSolution, lambda_l2_budget, solve_log
from mckv.solvers.scheme import GridConfig, StopEvent, Trigger

__all__ = [
    "EntropyKit",
    "GridConfig",
    "LinearSolution",
    "LogSolution",
    "StopEvent",
    "Trigger",
    "lambda_l2_budget",
    "m_transform",
    "phi_bump",
    "solve_linear",
    "solve_log",
]
