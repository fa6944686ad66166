"""Solvers for ``min_{x in X} lam*||x||_0 + f(x)``."""
from .apg import fista_l1, mapg, next_t, nmapg, nmapg_q_sequence
from .core import (
    CountingObjective,
    IterateTrace,
    NonFiniteObjectiveError,
    SolverConfig,
    SolverResult,
    Status,
    StopKind,
    StopRule,
    composite_objective,
    stop_check,
)
from .iht import apiht, epiht, ifb, ifb_parameters, piht

METHODS = {
    "PIHT": piht,
    "IFB": ifb,
    "mAPG": mapg,
    "nmAPG": nmapg,
    "EPIHT": epiht,
    "APIHT": apiht,
}

MONOTONE_METHODS = ("PIHT", "APIHT", "EPIHT", "mAPG")


def canonical_name(name):
    """Map a case-insensitive method name to its key in :data:`METHODS`."""
    for key in METHODS:
        if key.lower() == str(name).lower():
            return key
    raise KeyError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")


def get_solver(name):
    return METHODS[canonical_name(name)]


__all__ = [
    "METHODS",
    "MONOTONE_METHODS",
    "CountingObjective",
    "IterateTrace",
    "NonFiniteObjectiveError",
    "SolverConfig",
    "SolverResult",
    "Status",
    "StopKind",
    "StopRule",
    "apiht",
    "canonical_name",
    "composite_objective",
    "epiht",
    "fista_l1",
    "get_solver",
    "ifb",
    "ifb_parameters",
    "mapg",
    "next_t",
    "nmapg",
    "nmapg_q_sequence",
    "piht",
    "stop_check",
]
