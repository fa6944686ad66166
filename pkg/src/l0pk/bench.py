"""Synthetic instance generation and benchmark suites.

Each replicate draws its random stream from ``(suite seed, n, s, replicate)``,
so results do not depend on execution order or on the number of workers.
"""
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .objectives import LeastSquares, Logistic, accuracy
from .prox import BoxConstraint
from .solvers import METHODS, SolverConfig, StopRule, canonical_name, fista_l1

log = logging.getLogger(__name__)

WORKERS_ENV = "L0PK_WORKERS"
BOX_BOUND = 1e10

DESK_M = 750
DESK_NS = (2000, 3500, 5000)
FULL_M = 3000
FULL_NS = (8000, 14000, 20000)


def sparsity_levels(n):
    """The two sparsity levels ``floor(n/100)`` and ``floor(2n/100)``."""
    return (n // 100, 2 * n // 100)


def default_sizes(full_scale=False):
    ns = FULL_NS if full_scale else DESK_NS
    return [(n, s) for n in ns for s in sparsity_levels(n)]


def noise_std(noise, mode="std"):
    """Standard deviation for a noise level given as a std or a variance."""
    if mode == "std":
        return float(noise)
    if mode == "variance":
        return math.sqrt(noise)
    raise ValueError(f"noise mode must be 'std' or 'variance', got {mode!r}")


def worker_count():
    value = os.environ.get(WORKERS_ENV)
    if value:
        return max(1, int(value))
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def relative_error(x, x_true):
    """``||x - x_true|| / ||x_true||``."""
    nt = float(np.linalg.norm(x_true))
    if nt == 0:
        raise ValueError("relative error is undefined for a zero reference")
    return float(np.linalg.norm(np.asarray(x) - x_true)) / nt


def l0_norm(x):
    return int(np.count_nonzero(x))


@dataclass(frozen=True)
class CsInstance:
    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    m: int
    n: int
    s: int
    noise_sigma: float
    seed: object


def gen_cs_instance(m, n, s, noise_sigma, seed):
    """Gaussian compressive-sensing instance with ``s`` spikes of value +-1.

    ``A`` has i.i.d. standard normal entries with columns scaled to unit
    norm; ``b = A x_true + noise_sigma * N(0, I)``.
    """
    if not (m > 0 and n > 0):
        raise ValueError(f"m and n must be positive, got m={m}, n={n}")
    if not 0 <= s <= n:
        raise ValueError(f"sparsity s={s} must lie in [0, n={n}]")
    if not noise_sigma >= 0:
        raise ValueError("noise_sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=0)
    x_true = np.zeros(n)
    support = rng.choice(n, size=s, replace=False)
    x_true[support] = rng.choice([-1.0, 1.0], size=s)
    b = A @ x_true
    if noise_sigma > 0:
        b = b + noise_sigma * rng.standard_normal(m)
    return CsInstance(A, b, x_true, m, n, s, float(noise_sigma), seed)


@dataclass
class LogregDataset:
    train_X: np.ndarray
    train_y: np.ndarray
    test_X: np.ndarray
    test_y: np.ndarray
    name: str = "dataset"
    w_true: Optional[np.ndarray] = None

    def __post_init__(self):
        for y in (self.train_y, self.test_y):
            if not np.all(np.isin(y, (-1.0, 1.0))):
                raise ValueError("labels must be +1 or -1")
        if self.train_X.shape[1] != self.test_X.shape[1]:
            raise ValueError("train and test feature counts differ")

    @property
    def n_features(self):
        return self.train_X.shape[1]


def gen_synthetic_logreg(N, n, s_true, margin, seed, n_test=None):
    """Sparse-hyperplane classification data.

    Features are i.i.d. standard normal. The ground truth has ``s_true``
    nonzero weights and an intercept; labels are the sign of the score and
    samples closer than ``margin`` to the hyperplane are redrawn. With
    ``s_true = 0`` every label is the sign of the intercept.
    """
    if not 0 <= s_true <= n:
        raise ValueError(f"s_true={s_true} must lie in [0, n={n}]")
    n_test = N if n_test is None else n_test
    rng = np.random.default_rng(seed)
    u = np.zeros(n)
    idx = rng.choice(n, size=s_true, replace=False)
    u[idx] = rng.choice([-1.0, 1.0], size=s_true) * rng.uniform(0.5, 1.5, size=s_true)
    v = rng.uniform(-0.5, 0.5)
    if v == 0.0:
        v = 0.25
    norm_u = float(np.linalg.norm(u))

    total = N + n_test
    rows = []
    have = 0
    while have < total:
        X = rng.standard_normal((max(total - have, 16) * 2, n))
        score = X @ u + v
        if norm_u > 0:
            X = X[np.abs(score) / norm_u >= margin]
        rows.append(X)
        have += X.shape[0]
    X = np.vstack(rows)[:total]
    y = np.where(X @ u + v >= 0, 1.0, -1.0)
    w_true = np.append(u, v)
    return LogregDataset(X[:N], y[:N], X[N:], y[N:], name=f"synthetic-{N}x{n}-s{s_true}", w_true=w_true)


@dataclass
class RunRecord:
    """Outcome of one method on one replicate.

    ``iterations`` counts the l0 solver only; ``warm_iterations`` the FISTA
    warm start. ``ncf``/``ncgf`` count the l0 solver's evaluations.
    ``time`` includes the warm start.
    """

    method: str
    n: int
    s: int
    replicate: int
    iterations: int = 0
    warm_iterations: int = 0
    time: float = 0.0
    relerr: float = math.nan
    l0: int = 0
    ncf: int = 0
    ncgf: int = 0
    restarts: int = 0
    status: str = ""
    accuracy: float = math.nan
    error: Optional[str] = None
    x_final: Optional[np.ndarray] = field(default=None, repr=False)
    objective_trace: Optional[list] = field(default=None, repr=False)
    support_trace: Optional[list] = field(default=None, repr=False)
    min_abs_trace: Optional[list] = field(default=None, repr=False)
    magnitude_floor: float = math.nan

    @property
    def total_iterations(self):
        return self.iterations + self.warm_iterations

    @property
    def failed(self):
        return self.error is not None


@dataclass
class ReportRow:
    method: str
    n: int
    s: int
    iters_mean: float
    iters_std: float
    time_mean: float
    time_std: float
    relerr_mean: float
    relerr_std: float
    l0_mean: float
    ncf_total_mean: float
    ncgf_total_mean: float
    restart_rate: float
    accuracy_mean: Optional[float] = None


REPORT_FIELDS = (
    "method", "n", "s", "iters_mean", "iters_std", "time_mean", "time_std",
    "relerr_mean", "relerr_std", "l0_mean", "ncf_total_mean", "ncgf_total_mean", "restart_rate",
)


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    kind: str = "cs"
    meta: dict = field(default_factory=dict)

    def row(self, method, n, s):
        method = canonical_name(method)
        for r in self.rows:
            if (r.method, r.n, r.s) == (method, n, s):
                return r
        raise KeyError((method, n, s))

    def records_for(self, method=None, n=None, s=None):
        return [
            r for r in self.records
            if (method is None or r.method == canonical_name(method))
            and (n is None or r.n == n) and (s is None or r.s == s)
        ]

    def cells(self):
        return sorted({(r.n, r.s) for r in self.records})


def _sample_std(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else math.nan


def aggregate(records, kind="cs"):
    """Reduce run records into report rows sorted by ``(method, n, s)``."""
    groups = {}
    for rec in sorted(records, key=lambda r: (r.method, r.n, r.s, r.replicate)):
        if not rec.failed:
            groups.setdefault((rec.method, rec.n, rec.s), []).append(rec)
    rows = []
    for (method, n, s), recs in sorted(groups.items()):
        iters = [r.total_iterations for r in recs]
        times = [r.time for r in recs]
        errs = [r.relerr for r in recs]
        solver_iters = sum(r.iterations for r in recs)
        rows.append(ReportRow(
            method=method, n=n, s=s,
            iters_mean=float(np.mean(iters)), iters_std=_sample_std(iters),
            time_mean=float(np.mean(times)), time_std=_sample_std(times),
            relerr_mean=float(np.mean(errs)), relerr_std=_sample_std(errs),
            l0_mean=float(np.mean([r.l0 for r in recs])),
            ncf_total_mean=float(np.mean([r.ncf for r in recs])),
            ncgf_total_mean=float(np.mean([r.ncgf for r in recs])),
            restart_rate=sum(r.restarts for r in recs) / solver_iters if solver_iters else 0.0,
            accuracy_mean=float(np.mean([r.accuracy for r in recs])) if kind == "logreg" else None,
        ))
    return rows


def _solve_record(method, obj, box, cfg, x0, base, warm, extra=None):
    rec = RunRecord(method=method, **base)
    t0 = time.perf_counter()
    try:
        res = METHODS[method](obj, box, cfg, x0)
    except Exception as exc:  # a failing cell must not abort the suite
        rec.error = f"{type(exc).__name__}: {exc}"
        log.warning("%s failed on %s: %s", method, base, rec.error)
        return rec, None
    rec.time = time.perf_counter() - t0 + warm.time
    rec.warm_iterations = warm.iterations
    rec.iterations = res.iterations
    rec.ncf = res.trace.total_ncf
    rec.ncgf = res.trace.total_ncgf
    rec.restarts = res.trace.restart_count
    rec.status = res.status.value
    rec.l0 = l0_norm(res.x_final)
    rec.x_final = res.x_final
    rec.objective_trace = [res.trace.initial_objective] + list(res.trace.objective)
    rec.support_trace = res.trace.support
    rec.min_abs_trace = res.trace.min_abs_nonzero
    rec.magnitude_floor = box.magnitude_floor(cfg.lam / (obj.lipschitz() + cfg.mu))
    return rec, res


@dataclass
class _Warm:
    iterations: int
    time: float
    x: np.ndarray


@dataclass(frozen=True)
class CsSuiteConfig:
    """Parameters of the compressive-sensing protocol."""

    m: int = DESK_M
    sizes: tuple = tuple(default_sizes())
    replicates: int = 20
    methods: tuple = tuple(METHODS)
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(
        lam=0.3, mu=1e-6, omega=0.99, stop_rule=StopRule.rel_change(1e-5), nmapg_eta=0.8))
    noise: float = 0.05
    noise_mode: str = "std"
    warm_lam: float = 0.1
    warm_tol: float = 1e-2
    box_bound: float = BOX_BOUND
    seed: int = 0
    keep_traces: bool = True

    def __post_init__(self):
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError(f"replicates must be a positive integer, got {self.replicates}")
        object.__setattr__(self, "methods", tuple(canonical_name(m) for m in self.methods))
        object.__setattr__(self, "sizes", tuple((int(n), int(s)) for n, s in self.sizes))
        noise_std(self.noise, self.noise_mode)


def _cs_replicate(task):
    cfg, n, s, rep = task
    seed = np.random.SeedSequence([cfg.seed, n, s, rep])
    inst = gen_cs_instance(cfg.m, n, s, noise_std(cfg.noise, cfg.noise_mode), seed)
    obj = LeastSquares(inst.A, inst.b)
    box = BoxConstraint.uniform(n, -cfg.box_bound, cfg.box_bound)
    base = dict(n=n, s=s, replicate=rep)

    t0 = time.perf_counter()
    try:
        ws = fista_l1(obj, cfg.warm_lam, inst.A.T @ inst.b, tol=cfg.warm_tol, box=box)
    except Exception as exc:
        msg = f"warm start: {type(exc).__name__}: {exc}"
        return [RunRecord(method=m, error=msg, **base) for m in cfg.methods]
    warm = _Warm(ws.iterations, time.perf_counter() - t0, ws.x_final)

    out = []
    for method in cfg.methods:
        rec, _ = _solve_record(method, obj, box, cfg.solver, warm.x, base, warm)
        if not rec.failed:
            rec.relerr = relative_error(rec.x_final, inst.x_true)
        if not cfg.keep_traces:
            rec.x_final = rec.objective_trace = rec.support_trace = rec.min_abs_trace = None
        out.append(rec)
    return out


def _map(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def run_cs_suite(cfg=None, workers=None, **overrides):
    """Run the compressive-sensing protocol over all sizes and replicates.

    Per replicate: draw an instance, run the FISTA l1 warm start from
    ``A^T b``, then every method from that warm start. Warm-start
    iterations and time are added to each method's totals.
    """
    cfg = cfg or CsSuiteConfig()
    if overrides:
        cfg = replace(cfg, **overrides)
    workers = worker_count() if workers is None else workers
    tasks = [(cfg, n, s, rep) for n, s in cfg.sizes for rep in range(cfg.replicates)]
    records = [r for batch in _map(_cs_replicate, tasks, workers) for r in batch]
    records.sort(key=lambda r: (r.method, r.n, r.s, r.replicate))
    failures = [(r.method, r.n, r.s, r.replicate, r.error) for r in records if r.failed]
    return ExperimentReport(rows=aggregate(records), records=records, failures=failures, kind="cs",
                            meta={"m": cfg.m, "replicates": cfg.replicates, "seed": cfg.seed,
                                  "noise": cfg.noise, "noise_mode": cfg.noise_mode})


@dataclass(frozen=True)
class LogregSuiteConfig:
    methods: tuple = tuple(METHODS)
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(
        lam=5e-5, mu=1e-6, omega=0.99, stop_rule=StopRule.inf_norm(5e-4), nmapg_eta=0.6,
        max_iter=20000))
    warm_lam: float = 0.001
    warm_tol: float = 0.02
    box_bound: float = BOX_BOUND
    keep_traces: bool = True

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(canonical_name(m) for m in self.methods))


def run_logreg_suite(dataset, cfg=None, **overrides):
    """Sparse logistic regression protocol on one train/test split.

    FISTA l1 warm start from zero (inf-norm stopping), then each method;
    reports iterations, runtime and test accuracy.
    """
    cfg = cfg or LogregSuiteConfig()
    if overrides:
        cfg = replace(cfg, **overrides)
    obj = Logistic(dataset.train_X, dataset.train_y)
    n = dataset.n_features
    box = BoxConstraint.uniform(n + 1, -cfg.box_bound, cfg.box_bound)
    s = int(np.count_nonzero(dataset.w_true[:-1])) if dataset.w_true is not None else 0
    base = dict(n=n, s=s, replicate=0)

    t0 = time.perf_counter()
    ws = fista_l1(obj, cfg.warm_lam, np.zeros(n + 1), stop_rule=StopRule.inf_norm(cfg.warm_tol), box=box)
    warm = _Warm(ws.iterations, time.perf_counter() - t0, ws.x_final)

    records = []
    for method in cfg.methods:
        rec, _ = _solve_record(method, obj, box, cfg.solver, warm.x, base, warm)
        if not rec.failed:
            rec.l0 = l0_norm(rec.x_final[:-1])
            rec.accuracy = accuracy(dataset.test_X, dataset.test_y, rec.x_final)
        if not cfg.keep_traces:
            rec.x_final = rec.objective_trace = rec.support_trace = rec.min_abs_trace = None
        records.append(rec)
    records.sort(key=lambda r: r.method)
    failures = [(r.method, r.n, r.s, r.replicate, r.error) for r in records if r.failed]
    return ExperimentReport(rows=aggregate(records, kind="logreg"), records=records, failures=failures,
                            kind="logreg", meta={"dataset": dataset.name})


def format_table(report):
    """Aligned text tables: one block per metric, methods as columns, cells as rows."""
    present = {r.method for r in report.rows} | {f[0] for f in report.failures}
    methods = [m for m in METHODS if m in present]
    lines = []

    def block(title, fmt):
        head = f"{'n':>7} {'s':>5} | " + " ".join(f"{m:>16}" for m in methods)
        lines.extend([title, head, "-" * len(head)])
        cells = sorted({(r.n, r.s) for r in report.rows} | {(f[1], f[2]) for f in report.failures}, key=lambda c: (c[1] * 100 // max(c[0], 1), c[0]))
        for n, s in cells:
            vals = []
            for m in methods:
                try:
                    vals.append(f"{fmt(report.row(m, n, s)):>16}")
                except KeyError:
                    vals.append(f"{'failed':>16}")
            lines.append(f"{n:>7} {s:>5} | " + " ".join(vals))
        lines.append("")

    if report.kind == "cs":
        block("Average relative error / std", lambda r: f"{r.relerr_mean:.4f}/{r.relerr_std:.4f}")
    block("Average iterations / std", lambda r: f"{r.iters_mean:.1f}/{r.iters_std:.1f}")
    block("Average runtime (s) / std", lambda r: f"{r.time_mean:.3f}/{r.time_std:.3f}")
    if report.kind == "logreg":
        block("Test accuracy", lambda r: f"{r.accuracy_mean:.4f}")
    block("Average total NCGf (l0 solver only) / restart rate",
          lambda r: f"{r.ncgf_total_mean:.1f}/{r.restart_rate:.3f}")
    if report.failures:
        lines.append("Failures")
        for method, n, s, rep, err in report.failures:
            lines.append(f"  {method} n={n} s={s} replicate={rep}: {err}")
    return "\n".join(lines)
