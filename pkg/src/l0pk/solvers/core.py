"""Configuration, tracing and evaluation counting shared by all solvers."""
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..prox import BoxConstraint, TieRule, prox_l0_box


class StopKind(enum.Enum):
    REL_CHANGE = "rel_change"
    INF_NORM = "inf_norm"


@dataclass(frozen=True)
class StopRule:
    """``REL_CHANGE``: ``||dx|| / max(1, ||x_new||) < tol``; ``INF_NORM``: ``max|dx_i| < tol``."""

    kind: StopKind = StopKind.REL_CHANGE
    tol: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "kind", StopKind(self.kind))
        if not self.tol > 0:
            raise ValueError(f"stopping tolerance must be positive, got {self.tol}")

    @classmethod
    def rel_change(cls, tol):
        return cls(StopKind.REL_CHANGE, tol)

    @classmethod
    def inf_norm(cls, tol):
        return cls(StopKind.INF_NORM, tol)


def stop_check(rule, x_new, x_old):
    d = np.asarray(x_new) - np.asarray(x_old)
    if d.shape != np.shape(x_new) or np.shape(x_new) != np.shape(x_old):
        raise ValueError("iterates differ in length")
    if rule.kind is StopKind.INF_NORM:
        return bool(np.max(np.abs(d), initial=0.0) < rule.tol)
    return bool(np.linalg.norm(d) / max(1.0, float(np.linalg.norm(x_new))) < rule.tol)


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"


class NonFiniteObjectiveError(FloatingPointError):
    """The composite objective became NaN or infinite at an iterate."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by the l0 solvers.

    ``ifb_*`` and ``apg_*``/``nmapg_*`` fields only affect the corresponding
    baselines. ``None`` step sizes mean the defaults derived from ``L``.
    """

    lam: float = 0.3
    mu: float = 1e-6
    omega: float = 0.99
    max_iter: int = 5000
    stop_rule: StopRule = field(default_factory=StopRule)
    tie_rule: TieRule = TieRule.ZERO
    rng_seed: int = 0
    omega_schedule: Optional[Callable[[int], float]] = None
    ifb_beta: float = 1e-6
    ifb_alpha: Optional[float] = None
    apg_step: Optional[float] = None
    nmapg_eta: float = 0.8
    nmapg_delta: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "tie_rule", TieRule.parse(self.tie_rule))
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not 0 < self.omega < 1:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not 0 <= self.nmapg_eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {self.nmapg_eta}")
        if not self.nmapg_delta > 0:
            raise ValueError(f"delta must be positive, got {self.nmapg_delta}")
        if not self.ifb_beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.ifb_beta}")

    def omega_at(self, k):
        if self.omega_schedule is None:
            return self.omega
        w = float(self.omega_schedule(k))
        if not 0 < w <= self.omega:
            raise ValueError(f"omega_{k}={w} outside (0, {self.omega}]")
        return w


@dataclass
class IterateTrace:
    """Per-iteration records; entry ``k-1`` describes iterate ``x^k``.

    ``ncf``/``ncgf`` are cumulative evaluation counts of ``f`` and ``grad f``
    made by the algorithm itself (objective values recorded here for
    monitoring are not counted).
    """

    initial_objective: float
    initial_support: np.ndarray
    objective: list = field(default_factory=list)
    support: list = field(default_factory=list)
    min_abs_nonzero: list = field(default_factory=list)
    step_norm: list = field(default_factory=list)
    gap_norm: list = field(default_factory=list)
    restarted: list = field(default_factory=list)
    ncf: list = field(default_factory=list)
    ncgf: list = field(default_factory=list)

    def __len__(self):
        return len(self.objective)

    @property
    def total_ncf(self):
        return self.ncf[-1] if self.ncf else 0

    @property
    def total_ncgf(self):
        return self.ncgf[-1] if self.ncgf else 0

    @property
    def restart_count(self):
        return int(sum(self.restarted))

    def support_sizes(self):
        return [len(s) for s in self.support]

    def rows(self):
        """``(k, H, step_norm, gap_norm, support_size, restarted)`` per iteration."""
        for k in range(len(self)):
            yield (k + 1, self.objective[k], self.step_norm[k], self.gap_norm[k],
                   len(self.support[k]), int(self.restarted[k]))


@dataclass
class SolverResult:
    x_final: np.ndarray
    status: Status
    iterations: int
    trace: IterateTrace
    method: str = ""

    @property
    def converged(self):
        return self.status is Status.CONVERGED


class CountingObjective:
    """Wraps an objective and counts value/gradient evaluations."""

    def __init__(self, obj):
        self.obj = obj
        self.ncf = 0
        self.ncgf = 0

    def value(self, x):
        self.ncf += 1
        return self.obj.value(x)

    def gradient(self, x):
        self.ncgf += 1
        return self.obj.gradient(x)


def composite_objective(obj, box, lam, x, mask=None):
    """``H(x) = lam * ||x||_0 + f(x) + indicator_X(x)``, penalizing only ``mask``."""
    if not box.contains(x):
        return math.inf
    nz = x != 0
    if mask is not None:
        nz &= mask
    return lam * int(np.count_nonzero(nz)) + obj.value(x)


class Run:
    """State shared by one solver invocation: validation, prox step, tracing.

    Parameters
    ----------
    obj : SmoothObjective
    box : BoxConstraint
    cfg : SolverConfig
    x0 : array_like
        Starting point; must lie in ``box``.
    method : str
        Name stored on the result.
    monitor : callable, optional
        ``x -> float`` recorded in the trace instead of ``H``.
    """

    def __init__(self, obj, box, cfg, x0, method, monitor=None):
        if not isinstance(box, BoxConstraint):
            raise TypeError("box must be a BoxConstraint")
        x0 = np.array(x0, dtype=float)
        if x0.shape != (obj.dimension,) or box.dimension != obj.dimension:
            raise ValueError(
                f"dimension mismatch: objective {obj.dimension}, box {box.dimension}, x0 {x0.shape}"
            )
        if not box.contains(x0):
            raise ValueError("starting point is outside the box")
        L = float(obj.lipschitz())
        if not (L > 0 and math.isfinite(L)):
            raise ValueError(f"Lipschitz constant must be positive and finite, got {L}")
        self.obj = obj
        self.f = CountingObjective(obj)
        self.box = box
        self.cfg = cfg
        self.method = method
        self.L = L
        self.mask = obj.penalty_mask()
        self.x0 = x0
        self._monitor = monitor or (lambda x: composite_objective(obj, box, cfg.lam, x, self.mask))
        self.trace = IterateTrace(self._checked(x0, 0), self._support(x0))
        self.status = Status.MAX_ITER

    def H(self, x):
        """Composite objective evaluated through the counting wrapper."""
        if not self.box.contains(x):
            return math.inf
        nz = x != 0
        if self.mask is not None:
            nz &= self.mask
        return self.cfg.lam * int(np.count_nonzero(nz)) + self.f.value(x)

    def prox(self, center, step):
        """Minimize ``lam*||x||_0 + ||x - center||^2 / (2 step)`` over the box."""
        return prox_l0_box(center, self.cfg.lam * step, self.box, self.cfg.tie_rule, self.mask)

    def _support(self, x):
        nz = x != 0
        if self.mask is not None:
            nz &= self.mask
        return np.flatnonzero(nz)

    def _checked(self, x, k):
        h = self._monitor(x)
        if not math.isfinite(h):
            raise NonFiniteObjectiveError(
                f"{self.method}: objective is {h} at iteration {k} "
                f"(max |x| = {np.max(np.abs(x), initial=0.0):.3g}, L = {self.L:.6g})"
            )
        return h

    def record(self, k, x_new, x_old, y, restarted):
        """Append iteration ``k``; return True when the stopping rule holds."""
        t = self.trace
        support = self._support(x_new)
        t.objective.append(self._checked(x_new, k))
        t.support.append(support)
        t.min_abs_nonzero.append(float(np.min(np.abs(x_new[support]))) if support.size else math.inf)
        t.step_norm.append(float(np.linalg.norm(x_new - x_old)))
        t.gap_norm.append(float(np.linalg.norm(x_new - y)))
        t.restarted.append(bool(restarted))
        t.ncf.append(self.f.ncf)
        t.ncgf.append(self.f.ncgf)
        if stop_check(self.cfg.stop_rule, x_new, x_old):
            self.status = Status.CONVERGED
            return True
        return False

    def result(self, x):
        return SolverResult(x, self.status, len(self.trace), self.trace, self.method)
