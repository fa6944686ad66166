"""Proximal iterative hard thresholding for box-constrained l0 problems."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .objectives import LeastSquares, Logistic
from .prox import BoxConstraint, TieRule, prox_l0_box, prox_l0_box_1d
from .solvers import METHODS, SolverConfig, SolverResult, Status, StopRule, get_solver

__all__ = [
    "BACKEND",
    "BoxConstraint",
    "LeastSquares",
    "Logistic",
    "METHODS",
    "SolverConfig",
    "SolverResult",
    "Status",
    "StopRule",
    "TieRule",
    "__version__",
    "get_solver",
    "prox_l0_box",
    "prox_l0_box_1d",
]
