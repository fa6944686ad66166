"""Proximal iterative hard thresholding and its extrapolated variants."""
import numpy as np

from .core import Run


def piht(obj, box, cfg, x0):
    """Proximal iterative hard thresholding.

    Each step minimizes ``lam*||x||_0 + (L/2)||x - x^k + grad f(x^k)/L||^2
    + (mu/2)||x - x^k||^2`` over the box. The two quadratics merge into one
    with curvature ``L + mu`` centered at ``x^k - grad f(x^k)/(L + mu)``.
    """
    run = Run(obj, box, cfg, x0, "PIHT")
    step = 1.0 / (run.L + cfg.mu)
    x = run.x0
    for k in range(1, cfg.max_iter + 1):
        g = run.f.gradient(x)
        x_new = run.prox(x - step * g, step)
        stop = run.record(k, x_new, x, x, False)
        x = x_new
        if stop:
            break
    return run.result(x)


def _gradient_restart(y, x, g):
    return float(np.dot(y - x, g)) > 0.0


def apiht(obj, box, cfg, x0, restart_test=None):
    """Accelerated PIHT with support-restricted extrapolation and restart.

    Per iteration:

    1. ``y = x^k + omega_k (x^k - x^{k-1})`` on the support of ``x^k``, and
       ``y_i = x^k_i = 0`` off it, so ``y`` never gains nonzeros.
    2. If ``y`` leaves the box, or ``<y - x^k, grad f(y)> > 0``, reset
       ``y = x^k`` and take the gradient there. A reset after a gradient was
       already taken at ``y`` costs a second gradient evaluation.
    3. ``x^{k+1}`` is the box-constrained l0 prox at
       ``y - grad f(y)/(L + mu)`` with weight ``lam/(L + mu)``.

    ``restart_test(y, x, g) -> bool`` replaces the gradient test in step 2;
    it exists for diagnostics such as forcing a restart at every iteration.
    """
    run = Run(obj, box, cfg, x0, "APIHT")
    step = 1.0 / (run.L + cfg.mu)
    test = restart_test or _gradient_restart
    x_prev = x = run.x0
    for k in range(1, cfg.max_iter + 1):
        omega = cfg.omega_at(k)
        supp = x != 0
        y = x.copy()
        y[supp] = x[supp] + omega * (x[supp] - x_prev[supp])

        restarted = False
        if not box.contains(y):
            restarted = True
        else:
            g = run.f.gradient(y)
            if test(y, x, g):
                restarted = True
        if restarted:
            y = x
            g = run.f.gradient(x)

        x_new = run.prox(y - step * g, step)
        stop = run.record(k, x_new, x, y, restarted)
        x_prev, x = x, x_new
        if stop:
            break
    return run.result(x)


def epiht(obj, box, cfg, x0):
    """Extrapolated PIHT: full extrapolation, reset when it raises ``H``.

    The extra strongly convex term of the original model is taken as zero.
    Two objective evaluations (at ``y`` and at ``x^k``) and one gradient per
    iteration.
    """
    run = Run(obj, box, cfg, x0, "EPIHT")
    step = 1.0 / (run.L + cfg.mu)
    x_prev = x = run.x0
    for k in range(1, cfg.max_iter + 1):
        y = x + cfg.omega_at(k) * (x - x_prev)
        h_y = run.H(y)
        h_x = run.H(x)
        restarted = h_y > h_x
        if restarted:
            y = x
        g = run.f.gradient(y)
        x_new = run.prox(y - step * g, step)
        stop = run.record(k, x_new, x, y, restarted)
        x_prev, x = x, x_new
        if stop:
            break
    return run.result(x)


def ifb_parameters(L, beta=1e-6, alpha=None):
    """Default IFB step ``alpha = (0.999999 - 2 beta)/L``, validated.

    Constant ``alpha`` and ``beta`` must satisfy ``alpha*L + 2*beta < 1``.
    """
    if alpha is None:
        alpha = (0.999999 - 2.0 * beta) / L
    if not alpha > 0 or not beta >= 0:
        raise ValueError(f"IFB needs alpha > 0 and beta >= 0, got alpha={alpha}, beta={beta}")
    if not alpha * L + 2.0 * beta < 1.0:
        raise ValueError(f"IFB parameters violate alpha*L + 2*beta < 1: alpha={alpha}, beta={beta}, L={L}")
    return alpha, beta


def ifb(obj, box, cfg, x0):
    """Inertial forward-backward with the Euclidean distance.

    The subproblem ``lam*||x||_0 + ||x - x^k + 2 alpha grad f(x^k)||^2/(4 alpha)
    + ||x - y||^2/(4 alpha)`` with ``y = x^k + 2 beta (x^k - x^{k-1})`` is a
    single quadratic of weight ``1/(2 alpha)`` about the midpoint
    ``x^k - alpha grad f(x^k) + beta (x^k - x^{k-1})``.
    """
    run = Run(obj, box, cfg, x0, "IFB")
    alpha, beta = ifb_parameters(run.L, cfg.ifb_beta, cfg.ifb_alpha)
    x_prev = x = run.x0
    for k in range(1, cfg.max_iter + 1):
        g = run.f.gradient(x)
        d = x - x_prev
        y = x + 2.0 * beta * d
        x_new = run.prox(x - alpha * g + beta * d, alpha)
        stop = run.record(k, x_new, x, y, False)
        x_prev, x = x, x_new
        if stop:
            break
    return run.result(x)
