"""Runtime invariant suites.

Each suite returns a :class:`CheckResult`; failures carry a printable
counterexample. The CLI ``check`` subcommand runs them all.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .objectives import LeastSquares, Logistic, finite_difference_gradient
from .prox import BoxConstraint, TieRule, l0_box_objective_1d
from .solvers import METHODS, SolverConfig, StopRule, apiht, composite_objective, ifb, piht


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    counterexamples: list = field(default_factory=list)

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def random_prox_cases(count, rng):
    """Random ``(c, lam, lo, hi)`` covering every interval configuration."""
    c = rng.normal(0.0, 2.0, count)
    lam = 10.0 ** rng.uniform(-3, 1, count)
    a = rng.normal(0.0, 2.0, count)
    b = rng.normal(0.0, 2.0, count)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    kind = rng.integers(0, 6, count)
    lo = np.where(kind == 0, -np.inf, lo)
    hi = np.where(kind == 0, np.inf, hi)
    hi = np.where(kind == 1, np.inf, hi)
    lo = np.where(kind == 2, 0.0, lo)
    hi = np.where(kind == 3, lo, hi)  # degenerate interval
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    return c, lam, lo, hi


def _h_many(v, c, lam, lo, hi):
    out = (v != 0) * lam + 0.5 * (v - c) ** 2
    return np.where((v < lo) | (v > hi), np.inf, out)


def prox_oracle_min(c, lam, lo, hi, grid=10_000):
    """Brute-force minimum of ``h`` over candidates and a uniform grid."""
    cands = [0.0, min(max(c, lo), hi)]
    cands += [t for t in (lo, hi) if math.isfinite(t)]
    a, b = max(lo, c - 3.0), min(hi, c + 3.0)
    pts = np.array(cands)
    if a <= b:
        pts = np.concatenate([pts, np.linspace(a, b, grid)])
    return float(np.min(_h_many(pts, c, lam, lo, hi)))


TIE_CASES = (
    # (c, lam, lo, hi, zero-rule answer, keep-rule answer)
    (1.0, 0.5, -np.inf, np.inf, 0.0, 1.0),
    (2.0, 1.5, -1.0, 1.0, 0.0, 1.0),
    (-2.0, 1.5, -1.0, 1.0, 0.0, -1.0),
    (-1.0, 0.5, -3.0, 3.0, 0.0, -1.0),
)


def check_prox(count=10_000, seed=0, grid=10_000, tie_rule=TieRule.ZERO, inject_fault=False, kernels=None):
    """Box-l0 prox against the brute-force oracle, plus declared tie behaviour.

    With ``inject_fault`` the prox is called with the opposite tie rule for
    the second half of the suite; the tie cases in that half then disagree
    with the declared rule.
    """
    k = kernels or _backend.kernels
    tie_rule = TieRule.parse(tie_rule)
    rng = np.random.default_rng(seed)
    c, lam, lo, hi = random_prox_cases(count, rng)
    bad = []
    worst = 0.0
    half = count // 2
    for i in range(count):
        rule = tie_rule
        if inject_fault and i >= half:
            rule = TieRule.KEEP if tie_rule is TieRule.ZERO else TieRule.ZERO
        v = k.prox_l0_box_1d(c[i], lam[i], lo[i], hi[i], rule is TieRule.KEEP)
        hv = l0_box_objective_1d(v, c[i], lam[i], lo[i], hi[i])
        best = prox_oracle_min(c[i], lam[i], lo[i], hi[i], grid)
        gap = hv - best
        worst = max(worst, gap)
        floor = min([t for t in (abs(lo[i]), abs(hi[i]), math.sqrt(2 * lam[i])) if t != 0])
        problems = []
        if gap > 1e-12:
            problems.append(f"h(v)-min={gap:.3e}")
        if not lo[i] <= v <= hi[i]:
            problems.append("infeasible")
        if v != 0 and abs(v) < floor - 1e-12:
            problems.append(f"|v| below floor {floor:.6g}")
        if problems:
            bad.append(f"c={c[i]!r} lam={lam[i]!r} lo={lo[i]!r} hi={hi[i]!r} -> {v!r} ({', '.join(problems)})")
    for j, (tc, tl, tlo, thi, want_zero, want_keep) in enumerate(TIE_CASES):
        rule = tie_rule
        if inject_fault:
            rule = TieRule.KEEP if tie_rule is TieRule.ZERO else TieRule.ZERO
        v = k.prox_l0_box_1d(tc, tl, tlo, thi, rule is TieRule.KEEP)
        want = want_zero if tie_rule is TieRule.ZERO else want_keep
        if v != want:
            bad.append(f"tie c={tc} lam={tl} [{tlo}, {thi}] -> {v} but declared rule {tie_rule.value} gives {want}")
    detail = f"{count} draws + {len(TIE_CASES)} ties, worst excess {worst:.2e}, backend {k.NAME}"
    return CheckResult("prox", not bad, detail, bad[:5])


def _relerr(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def check_gradients(points=20, seed=0, h=1e-5, tol=1e-6):
    rng = np.random.default_rng(seed)
    ls = LeastSquares(rng.standard_normal((5, 3)), rng.standard_normal(5))
    lg = Logistic(rng.standard_normal((20, 4)), rng.choice([-1.0, 1.0], 20))
    bad, worst = [], 0.0
    for name, obj in (("least-squares", ls), ("logistic", lg)):
        for _ in range(points):
            x = rng.standard_normal(obj.dimension)
            err = _relerr(finite_difference_gradient(obj.value, x, h), obj.gradient(x))
            worst = max(worst, err)
            if err > tol:
                bad.append(f"{name} at x={x.tolist()}: relative error {err:.3e}")
    return CheckResult("gradient", not bad, f"2x{points} points, worst relative error {worst:.2e}", bad[:5])


def check_descent(pairs=100, seed=0, slack=1e-10):
    """Descent lemma, midpoint convexity and gradient monotonicity."""
    rng = np.random.default_rng(seed)
    ls = LeastSquares(rng.standard_normal((8, 5)), rng.standard_normal(8))
    lg = Logistic(rng.standard_normal((30, 6)), rng.choice([-1.0, 1.0], 30))
    bad = []
    for name, obj in (("least-squares", ls), ("logistic", lg)):
        L = obj.lipschitz()
        for _ in range(pairs):
            x = rng.standard_normal(obj.dimension) * 2
            y = rng.standard_normal(obj.dimension) * 2
            gy = obj.gradient(y)
            d = x - y
            lhs = obj.value(x) - obj.value(y) - gy @ d
            if lhs > 0.5 * L * (d @ d) + slack:
                bad.append(f"{name}: descent lemma fails at x={x.tolist()}, y={y.tolist()}")
            if obj.value(0.5 * (x + y)) > 0.5 * (obj.value(x) + obj.value(y)) + slack:
                bad.append(f"{name}: convexity fails at x={x.tolist()}, y={y.tolist()}")
            if (obj.gradient(x) - gy) @ d < -slack:
                bad.append(f"{name}: gradient monotonicity fails at x={x.tolist()}, y={y.tolist()}")
            if np.linalg.norm(obj.gradient(x) - gy) > L * np.linalg.norm(d) * (1 + 1e-9):
                bad.append(f"{name}: Lipschitz bound fails at x={x.tolist()}, y={y.tolist()}")
    return CheckResult("descent", not bad, f"2x{pairs} pairs", bad[:5])


def small_cs_problem(seed=0, m=40, n=100, s=4, sigma=0.01):
    from .bench import gen_cs_instance

    inst = gen_cs_instance(m, n, s, sigma, seed)
    obj = LeastSquares(inst.A, inst.b)
    box = BoxConstraint.uniform(n, -1e10, 1e10)
    return inst, obj, box


def check_restart(seed=0):
    """Forced-restart APIHT and beta=0 IFB both reproduce PIHT exactly."""
    inst, obj, box = small_cs_problem(seed)
    cfg = SolverConfig(lam=0.05, stop_rule=StopRule.rel_change(1e-10), max_iter=500)
    x0 = inst.A.T @ inst.b
    ref = piht(obj, box, cfg, x0)
    forced = apiht(obj, box, cfg, x0, restart_test=lambda y, x, g: True)
    step = 1.0 / (obj.lipschitz() + cfg.mu)
    plain = ifb(obj, box, SolverConfig(lam=0.05, stop_rule=cfg.stop_rule, max_iter=500,
                                       ifb_beta=0.0, ifb_alpha=step), x0)
    bad = []
    for name, r in (("APIHT with forced restart", forced), ("IFB with beta=0", plain)):
        if r.iterations != ref.iterations or not np.array_equal(r.x_final, ref.x_final) \
                or r.trace.objective != ref.trace.objective:
            bad.append(f"{name} differs from PIHT on seed {seed}")
    return CheckResult("restart", not bad, f"{ref.iterations} PIHT iterations reproduced exactly", bad)


def check_monotone(instances=5, seed=0, slack=1e-12):
    """Monotone methods never increase H; APIHT iterates respect the magnitude floor."""
    bad = []
    for i in range(instances):
        inst, obj, box = small_cs_problem(seed + i)
        cfg = SolverConfig(lam=0.05)
        x0 = inst.A.T @ inst.b
        for name in ("PIHT", "APIHT", "EPIHT", "mAPG"):
            r = METHODS[name](obj, box, cfg, x0)
            hs = [r.trace.initial_objective] + r.trace.objective
            jumps = np.diff(hs)
            if np.max(jumps, initial=-np.inf) > slack:
                bad.append(f"{name} seed {seed + i}: H rises by {np.max(jumps):.3e}")
            if name != "mAPG":
                floor = box.magnitude_floor(cfg.lam / (obj.lipschitz() + cfg.mu))
                low = min(r.trace.min_abs_nonzero, default=math.inf)
                if low < floor - 1e-12:
                    bad.append(f"{name} seed {seed + i}: nonzero of size {low:.3e} below floor {floor:.3e}")
    return CheckResult("monotone", not bad, f"{instances} instances x 4 methods", bad[:5])


def check_backends(count=20_000, seed=0):
    """Compiled and numpy kernels agree bit for bit."""
    if _backend.compiled_kernels is None:
        return CheckResult("backend", True, "compiled kernels not built; nothing to compare")
    ck, pk = _backend.compiled_kernels, _backend.python_kernels
    rng = np.random.default_rng(seed)
    c, lam, lo, hi = random_prox_cases(count, rng)
    bad = []
    for keep in (False, True):
        for l in (0.02, 0.5, 3.0):
            pen = rng.random(count) < 0.8
            for mask in (None, pen):
                a = ck.prox_l0_box(c, l, lo, hi, mask, keep)
                b = pk.prox_l0_box(c, l, lo, hi, mask, keep)
                if a.tobytes() != b.tobytes():
                    bad.append(f"prox_l0_box differs (lam={l}, keep={keep}, masked={mask is not None})")
        one = np.array([ck.prox_l0_box_1d(c[i], lam[i], lo[i], hi[i], keep) for i in range(2000)])
        two = np.array([pk.prox_l0_box_1d(c[i], lam[i], lo[i], hi[i], keep) for i in range(2000)])
        if one.tobytes() != two.tobytes():
            bad.append(f"prox_l0_box_1d differs (keep={keep})")
        if ck.hard_threshold(c, 1.0, keep).tobytes() != pk.hard_threshold(c, 1.0, keep).tobytes():
            bad.append("hard_threshold differs")
    if ck.soft_threshold(c, 0.7).tobytes() != pk.soft_threshold(c, 0.7).tobytes():
        bad.append("soft_threshold differs")
    if ck.project_box(c, lo, hi).tobytes() != pk.project_box(c, lo, hi).tobytes():
        bad.append("project_box differs")
    return CheckResult("backend", not bad, f"{count} draws, cython vs numpy", bad)


SUITES = {
    "prox": check_prox,
    "gradient": check_gradients,
    "descent": check_descent,
    "restart": check_restart,
    "monotone": check_monotone,
    "backend": check_backends,
}


def run_checks(only=None, inject_fault=False):
    names = list(SUITES) if not only else list(only)
    out = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown check suite {name!r}; choose from {', '.join(SUITES)}")
        fn = SUITES[name]
        out.append(fn(inject_fault=True) if (inject_fault and name == "prox") else fn())
    return out


def sample_neighborhood(obj, box, lam, x, draws=1000, seed=0, mask=None):
    """Perturbations drawn from the neighbourhood used by the local-minimality argument.

    ``Delta`` keeps ``x + Delta`` in the box, has ``||Delta||_inf < r`` with
    ``r = min_{i: x_i = 0} lam / |grad_i f(x)|`` and ``|Delta_i| < |x_i|`` on
    the support. Scales are log-uniform so both tiny and boundary-sized
    perturbations are tried; each draw perturbs the support, the zero set,
    or both.
    """
    rng = np.random.default_rng(seed)
    g = obj.gradient(x)
    n = x.size
    penalized = np.ones(n, dtype=bool) if mask is None else mask
    zero = (x == 0) & penalized
    free = ~zero
    gz = np.abs(g[zero])
    r = float(np.min(lam / gz[gz > 0])) if np.any(gz > 0) else 1.0
    bound = np.full(n, r)
    supp = (x != 0) & penalized
    bound[supp] = np.minimum(r, np.abs(x[supp]))
    shrink = 1.0 - 1e-9
    for _ in range(draws):
        mode = rng.integers(0, 3)
        active = np.ones(n, dtype=bool)
        if mode == 0:
            active = free.copy()
        elif mode == 1:
            active = zero & (rng.random(n) < rng.uniform(0, 1))
        scale = 10.0 ** rng.uniform(-10, 0)
        d = np.where(active, scale * shrink * bound * rng.uniform(-1, 1, n), 0.0)
        d = np.clip(x + d, box.lower, box.upper) - x
        yield d


def local_minimizer_certificate(obj, box, lam, x, mu=1e-6, draws=1000, seed=0, slack=1e-10):
    """Sampled local-minimality test and projected-gradient residual at ``x``.

    Returns ``(worst, residual)`` where ``worst`` is the smallest observed
    ``H(x + Delta) - H(x)`` and ``residual`` the largest
    ``|x_i - clamp_i(x_i - grad_i f(x)/(L + mu))|`` over the support.
    """
    mask = obj.penalty_mask()
    h0 = composite_objective(obj, box, lam, x, mask)
    worst = math.inf
    for d in sample_neighborhood(obj, box, lam, x, draws, seed, mask):
        worst = min(worst, composite_objective(obj, box, lam, x + d, mask) - h0)
    g = obj.gradient(x)
    supp = x != 0
    step = 1.0 / (obj.lipschitz() + mu)
    proj = np.clip(x - step * g, box.lower, box.upper)
    residual = float(np.max(np.abs(x[supp] - proj[supp]), initial=0.0))
    return worst, residual
