"""Time the compiled prox kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeat 50]

Both backends are also checked for bitwise-identical outputs on every input.
"""
import argparse
import timeit

import numpy as np

from l0pk._backend import compiled_kernels, python_kernels


def cases(n, rng):
    c = rng.standard_normal(n) * 2
    lo = np.where(rng.random(n) < 0.5, -np.inf, -rng.uniform(0.1, 3, n))
    hi = np.where(rng.random(n) < 0.5, np.inf, rng.uniform(0.1, 3, n))
    mask = rng.random(n) < 0.95
    return c, lo, hi, mask


def calls(k, c, lo, hi, mask):
    return {
        "project_box": lambda: k.project_box(c, lo, hi),
        "soft_threshold": lambda: k.soft_threshold(c, 0.3),
        "hard_threshold": lambda: k.hard_threshold(c, 0.8, False),
        "prox_l0_box": lambda: k.prox_l0_box(c, 0.3, lo, hi, None, False),
        "prox_l0_box+mask": lambda: k.prox_l0_box(c, 0.3, lo, hi, mask, False),
        "prox_l0_box_1d x1000": lambda: [k.prox_l0_box_1d(float(v), 0.3, -1.0, 1.0, False) for v in c[:1000]],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,10000,100000")
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    if compiled_kernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'n':>9}{'numpy (us)':>14}{'cython (us)':>14}{'speedup':>10}")
    for n in map(int, args.sizes.split(",")):
        data = cases(n, rng)
        py, cy = calls(python_kernels, *data), calls(compiled_kernels, *data)
        for name in py:
            a, b = py[name](), cy[name]()
            same = (np.asarray(a).tobytes() == np.asarray(b).tobytes())
            t_py = min(timeit.repeat(py[name], number=1, repeat=args.repeat)) * 1e6
            t_cy = min(timeit.repeat(cy[name], number=1, repeat=args.repeat)) * 1e6
            flag = "" if same else "  OUTPUTS DIFFER"
            print(f"{name:<22}{n:>9}{t_py:>14.1f}{t_cy:>14.1f}{t_py / t_cy:>9.1f}x{flag}")


if __name__ == "__main__":
    main()
