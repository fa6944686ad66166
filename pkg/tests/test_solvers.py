import itertools
import math

import numpy as np
import pytest

from l0pk.checks import check_monotone, check_restart, local_minimizer_certificate
from l0pk.checks import small_cs_problem as _small
from l0pk.objectives import LeastSquares, SmoothObjective
from l0pk.prox import BoxConstraint, prox_l0_box_1d
from l0pk.solvers import (
    METHODS,
    MONOTONE_METHODS,
    NonFiniteObjectiveError,
    SolverConfig,
    Status,
    StopRule,
    apiht,
    canonical_name,
    composite_objective,
    epiht,
    fista_l1,
    get_solver,
    ifb,
    ifb_parameters,
    mapg,
    next_t,
    nmapg,
    nmapg_q_sequence,
    piht,
    stop_check,
)

def small_cs_problem(seed):
    inst, obj, box = _small(seed)
    return obj, box, inst.A.T @ inst.b


TIGHT = SolverConfig(lam=0.5, stop_rule=StopRule.rel_change(1e-12))


def identity_instance():
    obj = LeastSquares(np.eye(3), np.array([2.0, 0.1, 1.5]))
    return obj, BoxConstraint.uniform(3, -1e10, 1e10)


def test_piht_identity_fixed_point():
    obj, box = identity_instance()
    res = piht(obj, box, TIGHT, np.zeros(3))
    assert res.converged
    assert np.allclose(res.x_final, [2.0, 0.0, 1.5], atol=1e-6)
    assert res.x_final[1] == 0.0
    assert math.isclose(math.sqrt(2 * 0.5 / (1 + 1e-6)), 1.0, rel_tol=1e-6)


@pytest.mark.parametrize("method", list(METHODS))
def test_identity_limit_points_agree(method):
    obj, box = identity_instance()
    ref = piht(obj, box, TIGHT, np.zeros(3))
    res = get_solver(method)(obj, box, TIGHT, np.zeros(3))
    assert res.converged
    assert np.allclose(res.x_final, ref.x_final, atol=1e-6)
    if method == "APIHT":
        assert res.iterations <= ref.iterations


@pytest.mark.parametrize("method", list(METHODS))
def test_zero_problem_converges_immediately(method):
    obj = LeastSquares(np.eye(4), np.zeros(4))
    res = get_solver(method)(obj, BoxConstraint.unbounded(4), SolverConfig(), np.zeros(4))
    assert res.converged
    assert res.iterations == 1
    assert not np.any(res.x_final)


def best_over_small_supports(A, b, lam, max_size):
    n = A.shape[1]
    best, arg = 0.5 * b @ b, np.zeros(n)
    for size in range(1, max_size + 1):
        for S in itertools.combinations(range(n), size):
            xs, *_ = np.linalg.lstsq(A[:, S], b, rcond=None)
            if np.any(xs == 0):
                continue
            val = lam * size + 0.5 * np.sum((A[:, S] @ xs - b) ** 2)
            if val < best:
                best, arg = val, np.zeros(n)
                arg[list(S)] = xs
    return best, arg


def test_piht_reaches_enumerated_optimum():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((30, 10))
    A /= np.linalg.norm(A, axis=0)
    x_true = np.zeros(10)
    x_true[[2, 7]] = [1.5, -2.0]
    b = A @ x_true + 0.01 * rng.standard_normal(30)
    obj = LeastSquares(A, b)
    box = BoxConstraint.unbounded(10)
    cfg = SolverConfig(lam=0.1, stop_rule=StopRule.rel_change(1e-13), max_iter=100000)
    best, arg = best_over_small_supports(A, b, 0.1, 3)
    # the enumerated optimum must be a PIHT fixed point for the comparison to apply
    step = 1 / (obj.lipschitz() + cfg.mu)
    center = arg - step * obj.gradient(arg)
    fixed = np.array([prox_l0_box_1d(c, 0.1 * step) for c in center])
    assert np.allclose(fixed, arg, atol=1e-8)
    res = piht(obj, box, cfg, A.T @ b)
    assert composite_objective(obj, box, 0.1, res.x_final) == pytest.approx(best, abs=1e-9)


def test_apiht_first_step_is_piht_step():
    obj, box, x0 = small_cs_problem(seed=2)
    cfg = SolverConfig(max_iter=1)
    assert np.array_equal(apiht(obj, box, cfg, x0).x_final, piht(obj, box, cfg, x0).x_final)
    assert np.array_equal(epiht(obj, box, cfg, x0).x_final, piht(obj, box, cfg, x0).x_final)


def test_forced_restart_reproduces_piht():
    obj, box, x0 = small_cs_problem(seed=1)
    cfg = SolverConfig()
    a = apiht(obj, box, cfg, x0, restart_test=lambda y, x, g: True)
    p = piht(obj, box, cfg, x0)
    assert a.iterations == p.iterations
    assert np.array_equal(a.x_final, p.x_final)
    assert a.trace.objective == p.trace.objective
    assert all(a.trace.restarted)
    assert check_restart(seed=4).passed


def test_apiht_gradient_counts():
    obj, box, x0 = small_cs_problem(seed=3)
    res = apiht(obj, box, SolverConfig(), x0)
    t = res.trace
    assert t.total_ncf == 0
    assert res.iterations <= t.total_ncgf <= 2 * res.iterations
    per_iter = np.diff([0] + t.ncgf)
    assert set(per_iter.tolist()) <= {1, 2}


def test_apiht_restarts_when_extrapolation_leaves_box():
    obj = LeastSquares(np.eye(2), np.array([5.0, 0.0]))
    box = BoxConstraint.uniform(2, -1.0, 1.0)
    res = apiht(obj, box, SolverConfig(lam=0.1, omega=0.9), np.array([0.5, 0.0]))
    assert np.allclose(res.x_final, [1.0, 0.0])
    assert any(res.trace.restarted)
    assert box.contains(res.x_final)


@pytest.mark.parametrize("fn, ncf, ncgf", [(piht, 0, 1), (epiht, 2, 1), (mapg, 2, 2), (ifb, 0, 1)])
def test_counter_rates(fn, ncf, ncgf):
    obj, box, x0 = small_cs_problem(seed=6)
    res = fn(obj, box, SolverConfig(max_iter=30), x0)
    assert res.trace.total_ncf == ncf * res.iterations
    assert res.trace.total_ncgf == ncgf * res.iterations


def test_ifb_beta_zero_is_piht():
    obj, box, x0 = small_cs_problem(seed=8)
    L = obj.lipschitz()
    cfg = SolverConfig(ifb_beta=0.0, ifb_alpha=1.0 / (L + 1e-6))
    a, p = ifb(obj, box, cfg, x0), piht(obj, box, SolverConfig(), x0)
    assert np.array_equal(a.x_final, p.x_final)
    assert a.iterations == p.iterations


def test_ifb_parameter_validation():
    alpha, beta = ifb_parameters(2.0)
    assert beta == 1e-6 and alpha == pytest.approx((0.999999 - 2e-6) / 2.0)
    with pytest.raises(ValueError):
        ifb_parameters(1.0, beta=0.1, alpha=0.9)
    with pytest.raises(ValueError):
        ifb_parameters(1.0, beta=-1.0)


def test_ifb_midpoint_reduction_against_grid():
    rng = np.random.default_rng(0)
    for _ in range(200):
        lam, alpha = rng.uniform(0.05, 2), rng.uniform(0.1, 1.0)
        a, b = rng.uniform(-3, 3, size=2)
        lo, hi = sorted(rng.uniform(-4, 4, size=2))
        if rng.random() < 0.5:
            lo, hi = min(lo, 0.0), max(hi, 0.0)

        def h2(x):
            return lam * (x != 0) + (x - a) ** 2 / (4 * alpha) + (x - b) ** 2 / (4 * alpha)

        grid = np.concatenate([np.linspace(lo, hi, 20001), [0.0] if lo <= 0 <= hi else [], [lo, hi]])
        grid = np.concatenate([grid, [min(max((a + b) / 2, lo), hi)]])
        best = min(h2(x) for x in grid)
        x = prox_l0_box_1d((a + b) / 2, lam * alpha, lo, hi)
        assert abs(h2(x) - best) <= 1e-12 or h2(x) < best


def test_next_t_and_q_sequence():
    assert next_t(1.0) == pytest.approx((math.sqrt(5) + 1) / 2)
    q = nmapg_q_sequence(0.8, 3)
    assert q[0] == 1.0
    assert q[1] == pytest.approx(1.8)
    assert q[2] == pytest.approx(2.44)
    assert nmapg_q_sequence(0.0, 4) == [1.0] * 4


@pytest.mark.parametrize("fn", [piht, apiht, epiht, mapg])
def test_monotone_descent(fn):
    for seed in range(20):
        obj, box, x0 = small_cs_problem(seed=seed)
        res = fn(obj, box, SolverConfig(), x0)
        H = [res.trace.initial_objective] + res.trace.objective
        assert all(b <= a + 1e-12 for a, b in zip(H, H[1:]))


def test_monotone_check_suite():
    assert check_monotone(instances=3, seed=11).passed


@pytest.mark.parametrize("fn", [piht, apiht, epiht])
def test_magnitude_floor_and_summability(fn):
    obj, box, x0 = small_cs_problem(seed=9)
    cfg = SolverConfig()
    res = fn(obj, box, cfg, x0)
    floor = box.magnitude_floor(cfg.lam / (obj.lipschitz() + cfg.mu))
    assert all(m >= floor - 1e-12 for m in res.trace.min_abs_nonzero)
    if fn is apiht:
        gaps = np.sum(np.square(res.trace.gap_norm))
        H = [res.trace.initial_objective] + res.trace.objective
        assert gaps <= 2 * (H[0] - min(H)) / cfg.mu + 1e-8


def test_support_stabilizes_and_certificate_holds():
    obj, box, x0 = small_cs_problem(seed=10)
    cfg = SolverConfig(stop_rule=StopRule.rel_change(1e-13), max_iter=100000)
    res = apiht(obj, box, cfg, x0)
    assert res.converged
    tail = res.trace.support[int(0.8 * res.iterations):]
    assert all(np.array_equal(s, tail[-1]) for s in tail)
    worst, residual = local_minimizer_certificate(obj, box, cfg.lam, res.x_final, cfg.mu, draws=300)
    assert worst >= -1e-10
    assert residual <= 1e-8


def test_all_methods_agree_on_small_instance():
    obj, box, x0 = small_cs_problem(seed=12)
    cfg = SolverConfig(stop_rule=StopRule.rel_change(1e-13), max_iter=100000)
    ref = piht(obj, box, cfg, x0).x_final
    for name, fn in METHODS.items():
        assert np.allclose(fn(obj, box, cfg, x0).x_final, ref, atol=1e-6), name


def test_results_lie_in_box_and_trace_lengths():
    obj, box, x0 = small_cs_problem(seed=13)
    box = BoxConstraint.uniform(obj.dimension, -0.8, 0.8)
    x0 = np.clip(x0, -0.8, 0.8)
    for name, fn in METHODS.items():
        res = fn(obj, box, SolverConfig(), x0)
        assert box.contains(res.x_final), name
        assert res.iterations == len(res.trace)
        assert res.method == name


def test_max_iter_status():
    obj, box, x0 = small_cs_problem(seed=1)
    res = apiht(obj, box, SolverConfig(max_iter=2), x0)
    assert res.status is Status.MAX_ITER and res.iterations == 2


def test_stop_check_examples():
    x = np.arange(5.0)
    assert stop_check(StopRule.rel_change(1e-9), x, x)
    new = np.array([10.0, 0.0])
    assert not stop_check(StopRule.rel_change(1e-5), new, new - np.array([0.2, 0.0]))
    assert stop_check(StopRule.inf_norm(5e-4), np.full(3, 4e-4), np.zeros(3))


def test_config_validation():
    for kw in ({"omega": 1.0}, {"omega": 0.0}, {"mu": 0.0}, {"lam": -1.0}, {"max_iter": 0},
               {"nmapg_eta": 1.0}, {"nmapg_delta": 0.0}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)
    with pytest.raises(ValueError):
        StopRule.rel_change(0.0)


def test_zero_lipschitz_rejected():
    class Zero(SmoothObjective):
        dimension = 2

        def value(self, x):
            return 0.0

        def gradient(self, x):
            return np.zeros(2)

        def lipschitz(self):
            return 0.0

    with pytest.raises(ValueError):
        piht(Zero(), BoxConstraint.unbounded(2), SolverConfig(), np.zeros(2))


def test_start_outside_box_and_dimension_mismatch():
    obj, _ = identity_instance()
    with pytest.raises(ValueError):
        piht(obj, BoxConstraint.uniform(3, -1, 1), SolverConfig(), np.full(3, 2.0))
    with pytest.raises(ValueError):
        piht(obj, BoxConstraint.unbounded(3), SolverConfig(), np.zeros(4))


def test_non_finite_objective_aborts():
    obj = LeastSquares(np.eye(2), np.array([np.nan, 1.0]), lipschitz=1.0)
    with pytest.raises(NonFiniteObjectiveError):
        piht(obj, BoxConstraint.unbounded(2), SolverConfig(), np.zeros(2))


def test_method_names():
    assert canonical_name("apiht") == "APIHT"
    assert canonical_name("NMAPG") == "nmAPG"
    with pytest.raises(KeyError, match="unknown method"):
        canonical_name("bogus")
    assert set(MONOTONE_METHODS) <= set(METHODS)


def test_fista_examples():
    obj = LeastSquares(np.eye(3), np.zeros(3))
    assert not np.any(fista_l1(obj, 0.1, np.zeros(3)).x_final)
    obj = LeastSquares(np.eye(1), np.array([2.0]))
    res = fista_l1(obj, 0.5, np.zeros(1), tol=1e-12)
    assert res.x_final[0] == pytest.approx(1.5, abs=1e-9)
    obj, box, x0 = small_cs_problem(seed=3)
    res = fista_l1(obj, 0.1, x0)
    assert res.trace.objective[-1] <= res.trace.initial_objective
    with pytest.raises(ValueError):
        fista_l1(obj, 0.0, x0)


def test_fista_leaves_intercept_unpenalized():
    from l0pk.objectives import Logistic

    X = np.zeros((10, 2))
    y = np.array([1.0] * 8 + [-1.0] * 2)
    res = fista_l1(Logistic(X, y), 5.0, np.zeros(3), tol=1e-10)
    assert res.x_final[-1] == pytest.approx(math.log(4), rel=1e-4)
    assert not np.any(res.x_final[:2])


def test_nmapg_eta_zero_runs_monotone():
    obj, box, x0 = small_cs_problem(seed=14)
    res = nmapg(obj, box, SolverConfig(nmapg_eta=0.0), x0)
    H = [res.trace.initial_objective] + res.trace.objective
    assert all(b <= a + 1e-12 for a, b in zip(H, H[1:]))
