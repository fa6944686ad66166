import math
from dataclasses import replace

import numpy as np
import pytest

from l0pk.bench import (
    CsSuiteConfig,
    LogregDataset,
    aggregate,
    default_sizes,
    format_table,
    gen_cs_instance,
    gen_synthetic_logreg,
    l0_norm,
    noise_std,
    relative_error,
    run_cs_suite,
    run_logreg_suite,
    sparsity_levels,
)
from l0pk.solvers import METHODS, SolverConfig

SMALL = dict(m=60, sizes=((200, 4),), replicates=3)


def test_cs_instance_construction():
    inst = gen_cs_instance(20, 10, 3, 0.1, 0)
    assert l0_norm(inst.x_true) == 3
    assert set(inst.x_true[inst.x_true != 0]) <= {-1.0, 1.0}
    assert np.allclose(np.linalg.norm(inst.A, axis=0), 1.0, atol=1e-12)


def test_cs_instance_noise_free_and_deterministic():
    inst = gen_cs_instance(20, 10, 3, 0.0, 4)
    assert np.array_equal(inst.b, inst.A @ inst.x_true)
    a, b = gen_cs_instance(20, 10, 3, 0.05, 9), gen_cs_instance(20, 10, 3, 0.05, 9)
    assert a.A.tobytes() == b.A.tobytes() and a.b.tobytes() == b.b.tobytes()


def test_cs_instance_rejects_bad_sparsity():
    with pytest.raises(ValueError):
        gen_cs_instance(5, 4, 5, 0.0, 0)


def test_relative_error_and_l0_examples():
    x = np.array([1.0, 0.0, -1.0])
    assert relative_error(x, x) == 0.0
    assert relative_error(np.zeros(3), x) == 1.0
    assert relative_error(2 * x, x) == 1.0
    assert l0_norm(x) == 2
    with pytest.raises(ValueError):
        relative_error(x, np.zeros(3))


def test_sizes_and_noise_modes():
    assert sparsity_levels(2000) == (20, 40)
    assert default_sizes() == [(2000, 20), (2000, 40), (3500, 35), (3500, 70), (5000, 50), (5000, 100)]
    assert default_sizes(True)[0] == (8000, 80)
    assert noise_std(0.05, "std") == 0.05
    assert noise_std(0.05, "variance") == pytest.approx(math.sqrt(0.05))
    with pytest.raises(ValueError):
        noise_std(0.05, "other")


def test_cs_suite_small_and_deterministic():
    a = run_cs_suite(CsSuiteConfig(**SMALL), workers=1)
    b = run_cs_suite(CsSuiteConfig(**SMALL), workers=2)
    assert not a.failures
    assert len(a.rows) == len(METHODS)
    strip = lambda rep: [replace(r, time_mean=0.0, time_std=0.0) for r in rep.rows]  # noqa: E731
    assert strip(a) == strip(b)
    for rec in a.records:
        assert rec.total_iterations == rec.iterations + rec.warm_iterations
        assert rec.status == "converged"


def test_cs_suite_marks_failed_cells():
    solver = replace(CsSuiteConfig().solver, ifb_alpha=10.0)
    rep = run_cs_suite(CsSuiteConfig(**SMALL, solver=solver, methods=("PIHT", "IFB")), workers=1)
    assert {f[0] for f in rep.failures} == {"IFB"}
    assert len(rep.failures) == 3
    assert rep.row("PIHT", 200, 4).iters_mean > 0
    assert "failed" in format_table(rep)


def test_replicates_must_be_positive():
    with pytest.raises(ValueError):
        CsSuiteConfig(replicates=0)


def test_aggregate_uses_sample_std():
    rep = run_cs_suite(CsSuiteConfig(**SMALL, methods=("PIHT",)), workers=1)
    iters = [r.total_iterations for r in rep.records]
    assert rep.rows[0].iters_std == pytest.approx(np.std(iters, ddof=1))
    one = aggregate(rep.records[:1])
    assert math.isnan(one[0].iters_std)


def test_synthetic_logreg_properties():
    ds = gen_synthetic_logreg(100, 20, 3, 0.5, 1)
    again = gen_synthetic_logreg(100, 20, 3, 0.5, 1)
    assert np.array_equal(ds.train_X, again.train_X) and np.array_equal(ds.test_y, again.test_y)
    u, v = ds.w_true[:-1], ds.w_true[-1]
    score = ds.train_X @ u + v
    assert np.all(np.abs(score) / np.linalg.norm(u) >= 0.5)
    assert np.all(np.where(score >= 0, 1.0, -1.0) == ds.train_y)


def test_synthetic_logreg_intercept_only():
    ds = gen_synthetic_logreg(50, 5, 0, 0.5, 2)
    assert len(set(ds.train_y)) == 1
    rep = run_logreg_suite(ds, methods=("PIHT",))
    assert rep.records[0].accuracy == 1.0


def test_logreg_suite_accuracy():
    ds = gen_synthetic_logreg(300, 50, 5, 0.5, 3)
    rep = run_logreg_suite(ds)
    assert not rep.failures
    for rec in rep.records:
        assert rec.accuracy >= 0.95, rec.method
        assert math.isnan(rec.relerr)


def test_logreg_dataset_rejects_bad_labels():
    X = np.zeros((2, 2))
    with pytest.raises(ValueError):
        LogregDataset(X, np.array([1.0, 2.0]), X, np.array([1.0, -1.0]))


def test_format_table_layout():
    rep = run_cs_suite(CsSuiteConfig(**SMALL), workers=1)
    text = format_table(rep)
    assert "Average relative error" in text and "Average iterations" in text
    assert all(m in text for m in METHODS)
