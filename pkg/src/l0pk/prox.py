"""Proximal and projection operators for l0, l1 and box-constrained l0.

All operators are componentwise. Thresholded coordinates are written as a
literal ``0.0`` so that supports can be read off with ``x != 0``.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels


class TieRule(enum.Enum):
    """Which point to return when zero and a nonzero candidate cost the same."""

    ZERO = "zero"
    KEEP = "keep"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown tie rule {value!r}; expected 'zero' or 'keep'") from None


@dataclass(frozen=True)
class BoxConstraint:
    """Componentwise bounds ``lower <= x <= upper``; entries may be infinite."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.ascontiguousarray(self.lower, dtype=float)
        upper = np.ascontiguousarray(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError(f"bounds must be 1-D of equal length, got {lower.shape} and {upper.shape}")
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise ValueError("bounds must not be NaN")
        if np.any(lower > upper):
            i = int(np.flatnonzero(lower > upper)[0])
            raise ValueError(f"lower[{i}]={lower[i]} exceeds upper[{i}]={upper[i]}")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, n, lower=-np.inf, upper=np.inf):
        return cls(np.full(n, float(lower)), np.full(n, float(upper)))

    @classmethod
    def unbounded(cls, n):
        return cls.uniform(n)

    @property
    def dimension(self):
        return self.lower.shape[0]

    def contains(self, x):
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def magnitude_floor(self, lam_eff):
        """Smallest magnitude a nonzero output of :func:`prox_l0_box` can have.

        Minimum over the nonzero members of ``{|l_j|, |u_j|, sqrt(2*lam_eff)}``.
        """
        cands = np.concatenate([np.abs(self.lower), np.abs(self.upper), [math.sqrt(2.0 * lam_eff)]])
        cands = cands[cands != 0]
        return float(cands.min())


@dataclass(frozen=True)
class Threshold:
    gamma: float
    tie_rule: TieRule = TieRule.ZERO

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"threshold must be nonnegative, got {self.gamma}")
        object.__setattr__(self, "tie_rule", TieRule.parse(self.tie_rule))


def _vec(x):
    return np.ascontiguousarray(x, dtype=float)


def project_box(x, box):
    """Euclidean projection onto the box, i.e. a componentwise clamp."""
    x = _vec(x)
    if x.shape != box.lower.shape:
        raise ValueError(f"x has shape {x.shape}, box has dimension {box.dimension}")
    return kernels.project_box(x, box.lower, box.upper)


def soft_threshold(c, lam):
    """``sign(c) * max(|c| - lam, 0)``, the prox of ``lam * ||.||_1``."""
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    return kernels.soft_threshold(_vec(c), float(lam))


def hard_threshold(c, th):
    """Keep entries with ``|c_i| > gamma``; ``|c_i| == gamma`` follows the tie rule."""
    if not isinstance(th, Threshold):
        th = Threshold(float(th))
    return kernels.hard_threshold(_vec(c), float(th.gamma), th.tie_rule is TieRule.KEEP)


def prox_l0_box_1d(c, lam, lo=-np.inf, hi=np.inf, tie_rule=TieRule.ZERO):
    """Global minimizer of ``lam*|x|_0 + (x - c)**2 / 2`` over ``[lo, hi]``.

    If zero is infeasible the answer is the clamp of ``c``. Otherwise the
    only candidates are ``0`` and ``clamp(c)``; when ``c`` itself is feasible
    the comparison reduces to hard thresholding at ``sqrt(2*lam)``.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if not lo <= hi:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    keep = TieRule.parse(tie_rule) is TieRule.KEEP
    return kernels.prox_l0_box_1d(float(c), float(lam), float(lo), float(hi), keep)


def prox_l0_box(c, lam, box, tie_rule=TieRule.ZERO, penalized=None):
    """Componentwise :func:`prox_l0_box_1d`.

    Parameters
    ----------
    c : array_like
        Center of the quadratic term.
    lam : float
        Weight of the l0 term.
    box : BoxConstraint
    tie_rule : TieRule
    penalized : array_like of bool, optional
        Coordinates carrying the l0 penalty. The others are only projected
        onto the box. Default: all coordinates are penalized.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    c = _vec(c)
    if c.shape != box.lower.shape:
        raise ValueError(f"c has shape {c.shape}, box has dimension {box.dimension}")
    if penalized is not None:
        penalized = np.asarray(penalized, dtype=bool)
        if penalized.shape != c.shape:
            raise ValueError("penalty mask must match c")
    keep = TieRule.parse(tie_rule) is TieRule.KEEP
    return kernels.prox_l0_box(c, float(lam), box.lower, box.upper, penalized, keep)


def l0_box_objective_1d(x, c, lam, lo=-np.inf, hi=np.inf):
    """``h(x) = indicator_[lo,hi](x) + lam*|x|_0 + (x - c)**2 / 2``."""
    if x < lo or x > hi:
        return math.inf
    return (lam if x != 0 else 0.0) + 0.5 * (x - c) ** 2
