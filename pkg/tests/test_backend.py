import os
import subprocess
import sys

import numpy as np
import pytest

from l0pk import BACKEND
from l0pk._backend import compiled_kernels, python_kernels
from l0pk.checks import check_backends


def test_backend_name():
    assert BACKEND in ("cython", "python")


def test_kernels_agree_on_examples(kern):
    lo = np.full(3, -1.0)
    hi = np.full(3, 1.0)
    assert kern.project_box(np.array([2.0, -3.0, 0.0]), lo, hi).tolist() == [1.0, -1.0, 0.0]
    assert kern.soft_threshold(np.array([2.0, 0.3, -2.0]), 0.5).tolist() == [1.5, 0.0, -1.5]
    assert kern.hard_threshold(np.array([1.0, 3.0]), 1.0, False).tolist() == [0.0, 3.0]
    assert kern.hard_threshold(np.array([1.0, 3.0]), 1.0, True).tolist() == [1.0, 3.0]
    assert kern.prox_l0_box_1d(1.2, 0.5, 2.0, 3.0, False) == 2.0
    out = kern.prox_l0_box(np.array([2.0, 0.9, 0.1]), 0.5, lo, hi, np.array([True, True, False]), False)
    assert out.tolist() == [1.0, 0.0, 0.1]
    assert kern.prox_l0_box(np.array([2.0, 0.9]), 0.5, lo[:2], hi[:2], None, False).tolist() == [1.0, 0.0]


@pytest.mark.skipif(compiled_kernels is None, reason="extension not built")
def test_compiled_matches_numpy_bitwise():
    res = check_backends(count=5000, seed=7)
    assert res.passed, res.counterexamples


@pytest.mark.skipif(compiled_kernels is None, reason="extension not built")
def test_compiled_solver_run_matches_numpy(rng):
    A = rng.standard_normal((30, 80))
    c = A.T @ rng.standard_normal(30)
    lo, hi = np.full(80, -2.0), np.full(80, 2.0)
    for lam in (0.1, 1.0, 10.0):
        a = compiled_kernels.prox_l0_box(c, lam, lo, hi, None, False)
        b = python_kernels.prox_l0_box(c, lam, lo, hi, None, False)
        assert a.tobytes() == b.tobytes()


def test_env_var_forces_fallback():
    env = dict(os.environ, L0PK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import l0pk; print(l0pk.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
