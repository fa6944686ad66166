"""Smooth convex data terms with analytic gradients and Lipschitz constants."""
import warnings
from typing import NamedTuple

import numpy as np
from scipy.special import expit

POWER_TOL = 1e-8
POWER_MAX_ITER = 5000
POWER_INFLATION = 1.01


class PowerMethodWarning(RuntimeWarning):
    pass


class PowerResult(NamedTuple):
    value: float
    iterations: int
    converged: bool


def power_method(A, tol=POWER_TOL, max_iter=POWER_MAX_ITER, seed=0):
    """Estimate ``lambda_max(A^T A)`` by power iteration.

    Iterates on whichever of ``A^T A`` and ``A A^T`` is smaller (they share
    their nonzero spectrum). Stops once the Rayleigh quotient changes by less
    than ``tol`` relative. On non-convergence the last estimate is inflated
    by 1%, since an over-estimate of a Lipschitz constant is still valid,
    and a :class:`PowerMethodWarning` is issued.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    gram = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    if not np.any(gram):
        raise ValueError("matrix is zero")

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    prev_delta = np.inf
    for k in range(1, max_iter + 1):
        w = gram @ v
        new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector orthogonal to the range; restart from a fresh draw
            v = rng.standard_normal(gram.shape[0])
            v /= np.linalg.norm(v)
            continue
        v = w / nw
        delta = abs(new - est)
        # the estimate converges geometrically; delta alone understates the
        # remaining error by 1/(1 - rate) when the spectral gap is small
        rate = min(delta / prev_delta, 0.999999) if prev_delta > 0 else 0.0
        remaining = delta * rate / (1.0 - rate)
        if delta <= tol * abs(new) and remaining <= tol * abs(new):
            return PowerResult(new, k, True)
        est, prev_delta = new, delta
    warnings.warn(
        f"power method did not converge in {max_iter} iterations; inflating estimate {est:.6g} by 1%",
        PowerMethodWarning,
        stacklevel=2,
    )
    return PowerResult(est * POWER_INFLATION, max_iter, False)


def power_method_lmax(A, tol=POWER_TOL, max_iter=POWER_MAX_ITER, seed=0):
    return power_method(A, tol, max_iter, seed).value


def finite_difference_gradient(f, x, h=1e-5):
    """Central differences ``(f(x + h e_i) - f(x - h e_i)) / 2h``."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.array(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        xi = x[i]
        x[i] = xi + h
        fp = f(x)
        x[i] = xi - h
        fm = f(x)
        x[i] = xi
        g[i] = (fp - fm) / (2 * h)
    return g


class SmoothObjective:
    """Convex differentiable ``f`` with ``L``-Lipschitz gradient.

    Subclasses implement :meth:`value`, :meth:`gradient` and set
    ``self.lipschitz_constant``. Instances are immutable after construction.
    """

    dimension: int
    lipschitz_constant: float

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def lipschitz(self):
        return self.lipschitz_constant

    def penalty_mask(self):
        """Coordinates carrying the l0 penalty, or ``None`` for all of them."""
        return None

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected a vector of length {self.dimension}, got shape {x.shape}")
        return x


class LeastSquares(SmoothObjective):
    """``f(x) = ||A x - b||^2 / 2`` with ``L = lambda_max(A^T A)``."""

    def __init__(self, A, b, lipschitz=None, seed=0):
        A = np.ascontiguousarray(A, dtype=float)
        b = np.ascontiguousarray(b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ValueError(f"incompatible shapes A{A.shape}, b{b.shape}")
        A.flags.writeable = False
        b.flags.writeable = False
        self.A, self.b = A, b
        self.dimension = A.shape[1]
        if lipschitz is None:
            lipschitz = power_method_lmax(A, seed=seed)
        self.lipschitz_constant = float(lipschitz)

    def value(self, x):
        r = self.A @ self._check(x) - self.b
        return 0.5 * float(r @ r)

    def gradient(self, x):
        return self.A.T @ (self.A @ self._check(x) - self.b)


def ls_value(obj, x):
    return obj.value(x)


def ls_gradient(obj, x):
    return obj.gradient(x)


class Logistic(SmoothObjective):
    """Mean logistic loss over the augmented variable ``w = (u, v)``.

    ``f(w) = (1/N) sum_i log(1 + exp(-y_i (u . x_i + v)))``, so the
    dimension is ``n + 1`` with the intercept ``v`` last. The intercept is
    not penalized.
    """

    def __init__(self, samples, labels, lipschitz=None, seed=0):
        X = np.ascontiguousarray(samples, dtype=float)
        y = np.ascontiguousarray(labels, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError(f"incompatible shapes samples{X.shape}, labels{y.shape}")
        if not np.all(np.abs(y) == 1):
            raise ValueError("labels must be +1 or -1")
        self.samples, self.labels = X, y
        self.n_samples, self.n_features = X.shape
        self.dimension = self.n_features + 1
        # rows y_i * [x_i, 1]
        Z = np.hstack([X, np.ones((X.shape[0], 1))])
        self._yz = Z * y[:, None]
        self._yz.flags.writeable = False
        if lipschitz is None:
            lipschitz = logistic_lipschitz_from(Z, seed)
        self.lipschitz_constant = float(lipschitz)

    def margins(self, w):
        return self._yz @ self._check(w)

    def value(self, w):
        return float(np.mean(np.logaddexp(0.0, -self.margins(w))))

    def gradient(self, w):
        s = expit(-self.margins(w))
        return -(self._yz.T @ s) / self.n_samples

    def penalty_mask(self):
        mask = np.ones(self.dimension, dtype=bool)
        mask[-1] = False
        return mask


def logistic_lipschitz_from(Z, seed=0):
    """``lambda_max(Z^T Z) / (4 N)``: each scalar logistic curvature is at most 1/4."""
    return power_method_lmax(Z, seed=seed) / (4.0 * Z.shape[0])


def logistic_value(obj, w):
    return obj.value(w)


def logistic_gradient(obj, w):
    return obj.gradient(w)


def logistic_lipschitz(obj):
    Z = np.hstack([obj.samples, np.ones((obj.n_samples, 1))])
    return logistic_lipschitz_from(Z)


def accuracy(samples, labels, w):
    """Fraction of samples with ``sign(u . x + v) == y``; a zero score counts as +1."""
    w = np.asarray(w, dtype=float)
    score = np.asarray(samples, dtype=float) @ w[:-1] + w[-1]
    pred = np.where(score >= 0, 1.0, -1.0)
    return float(np.mean(pred == np.asarray(labels)))
