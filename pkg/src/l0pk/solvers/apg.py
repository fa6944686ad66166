"""Accelerated proximal gradient baselines and the l1 FISTA warm start."""
import math

import numpy as np

from ..prox import BoxConstraint, project_box, soft_threshold
from .core import Run, SolverConfig, StopRule


def next_t(t):
    return (math.sqrt(1.0 + 4.0 * t * t) + 1.0) / 2.0


def _apg_step(run, cfg):
    step = cfg.apg_step if cfg.apg_step is not None else 1.0 / (run.L + 1e-6)
    if not 0 < step < 2.0 / run.L:
        raise ValueError(f"APG step {step} outside (0, 2/L)")
    return step


def mapg(obj, box, cfg, x0):
    """Monotone accelerated proximal gradient.

    Keeps ``(x^k, z^k, t_k)``; proxes from the extrapolated ``y^k`` and from
    ``x^k`` and keeps whichever gives the smaller composite objective. Starts
    from ``t_0 = 0, t_1 = 1, z^1 = x^1 = x^0``. The trace's ``restarted``
    flag marks iterations that fell back to the plain step from ``x^k``.
    """
    run = Run(obj, box, cfg, x0, "mAPG")
    step = _apg_step(run, cfg)
    x_prev = x = z = run.x0
    t_prev, t = 0.0, 1.0
    for k in range(1, cfg.max_iter + 1):
        y = x + (t_prev / t) * (z - x) + ((t_prev - 1.0) / t) * (x - x_prev)
        z = run.prox(y - step * run.f.gradient(y), step)
        v = run.prox(x - step * run.f.gradient(x), step)
        t_prev, t = t, next_t(t)
        fallback = not run.H(z) <= run.H(v)
        x_new = v if fallback else z
        stop = run.record(k, x_new, x, y, fallback)
        x_prev, x = x, x_new
        if stop:
            break
    return run.result(x)


def nmapg(obj, box, cfg, x0):
    """Non-monotone APG.

    Accepts ``z^{k+1}`` whenever ``F(z^{k+1}) <= c_k - delta ||z^{k+1} - y^k||^2``
    where ``c_k`` is the ``eta``-weighted running average of ``F(x^k)``
    (``q_1 = 1, c_1 = F(x^1)``, ``q_{k+1} = eta q_k + 1``); otherwise falls
    back to the mAPG comparison.
    """
    run = Run(obj, box, cfg, x0, "nmAPG")
    step = _apg_step(run, cfg)
    eta, delta = cfg.nmapg_eta, cfg.nmapg_delta
    x_prev = x = z = run.x0
    t_prev, t = 0.0, 1.0
    q, c = 1.0, run.H(x)
    for k in range(1, cfg.max_iter + 1):
        y = x + (t_prev / t) * (z - x) + ((t_prev - 1.0) / t) * (x - x_prev)
        z = run.prox(y - step * run.f.gradient(y), step)
        h_z = run.H(z)
        dz = z - y
        fallback = not h_z <= c - delta * float(dz @ dz)
        if fallback:
            v = run.prox(x - step * run.f.gradient(x), step)
            h_v = run.H(v)
            if h_z <= h_v:
                x_new, h_new = z, h_z
            else:
                x_new, h_new = v, h_v
        else:
            x_new, h_new = z, h_z
        t_prev, t = t, next_t(t)
        q_new = eta * q + 1.0
        c = (eta * q * c + h_new) / q_new
        q = q_new
        stop = run.record(k, x_new, x, y, fallback)
        x_prev, x = x, x_new
        if stop:
            break
    return run.result(x)


def nmapg_q_sequence(eta, count):
    """First ``count`` values of ``q_1 = 1, q_{k+1} = eta q_k + 1``."""
    q, out = 1.0, []
    for _ in range(count):
        out.append(q)
        q = eta * q + 1.0
    return out


def fista_l1(obj, lam1, x0, tol=1e-2, max_iter=10000, stop_rule=None, box=None):
    """FISTA on ``f + lam1 * ||x||_1`` with step ``1/L``.

    Only the coordinates in ``obj.penalty_mask()`` are shrunk. ``stop_rule``
    defaults to a relative-change test at ``tol``. Returns a
    :class:`~l0pk.solvers.core.SolverResult` whose trace records the l1
    objective; ``x_final`` is projected onto ``box`` when one is given.
    """
    if not lam1 > 0:
        raise ValueError(f"lam1 must be positive, got {lam1}")
    n = obj.dimension
    unbounded = BoxConstraint.unbounded(n)
    stop_rule = stop_rule or StopRule.rel_change(tol)
    cfg = SolverConfig(lam=lam1, max_iter=max_iter, stop_rule=stop_rule)
    mask = obj.penalty_mask()

    def l1_objective(x):
        ax = np.abs(x) if mask is None else np.abs(x[mask])
        return obj.value(x) + lam1 * float(ax.sum())

    run = Run(obj, unbounded, cfg, x0, "FISTA-l1", monitor=l1_objective)
    step = 1.0 / run.L
    x = y = run.x0
    t = 1.0
    for k in range(1, max_iter + 1):
        c = y - step * run.f.gradient(y)
        if mask is None:
            x_new = soft_threshold(c, lam1 * step)
        else:
            x_new = c.copy()
            x_new[mask] = soft_threshold(c[mask], lam1 * step)
        t_new = next_t(t)
        y_used = y
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        t = t_new
        stop = run.record(k, x_new, x, y_used, False)
        x = x_new
        if stop:
            break
    result = run.result(x)
    if box is not None:
        result.x_final = project_box(result.x_final, box)
    return result
