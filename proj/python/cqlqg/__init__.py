"""Coherent quantum LQG controller synthesis by horizon homotopy."""

from ._core import (
    INFINITE_HORIZON,
    ControllerTriple,
    Dimensions,
    Error,
    FinalResult,
    HomotopyState,
    StrongMinReport,
    SynthesisProblem,
    check_strong_local_min,
    closed_loop,
    cost,
    grad_discounted,
    grad_infinite,
    grad_T_derivative,
    max_admissible_T,
    random_problem,
    solve_ale,
    spectral_abscissa,
    synthesize,
)

__all__ = [
    "INFINITE_HORIZON",
    "ControllerTriple",
    "Dimensions",
    "Error",
    "FinalResult",
    "HomotopyState",
    "StrongMinReport",
    "SynthesisProblem",
    "check_strong_local_min",
    "closed_loop",
    "cost",
    "grad_discounted",
    "grad_infinite",
    "grad_T_derivative",
    "max_admissible_T",
    "random_problem",
    "solve_ale",
    "spectral_abscissa",
    "synthesize",
]
