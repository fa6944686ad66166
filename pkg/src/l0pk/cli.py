"""Command line entry point: ``l0pk solve | bench-cs | bench-logreg | check``.

Settings come from built-in defaults, then an INI config file
(``--config``), then flags. The effective configuration is written to the
output directory as ``config.ini`` and can be passed back with ``--config``.

Exit codes: ``solve`` 0 converged, 2 iteration limit, 1 error;
``bench-*`` 0 all cells ran, 3 some cells failed, 1 error;
``check`` 0 all suites pass, 1 otherwise.
"""
import argparse
import configparser
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bench, checks
from . import io as l0io
from .objectives import LeastSquares, Logistic, accuracy
from .prox import BoxConstraint
from .solvers import METHODS, SolverConfig, StopRule, canonical_name, fista_l1, get_solver

log = logging.getLogger("l0pk")

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITER, EXIT_FAILED_CELLS = 0, 1, 2, 3

# section -> key -> (type, default); None defaults are filled per problem kind
SCHEMA = {
    "run": {"seed": (int, 0), "out": (str, "out")},
    "solver": {
        "method": (str, "apiht"),
        "lambda": (float, None),
        "mu": (float, 1e-6),
        "omega": (float, 0.99),
        "max_iter": (int, 5000),
        "tol": (float, None),
        "stop_rule": (str, None),
        "tie_rule": (str, "zero"),
        "ifb_beta": (float, 1e-6),
        "nmapg_eta": (float, None),
        "nmapg_delta": (float, 1e-5),
    },
    "problem": {
        "gen_cs": (str, ""),
        "matrix": (str, ""),
        "rhs": (str, ""),
        "libsvm": (str, ""),
        "features": (int, 0),
        "noise": (float, 0.05),
        "noise_mode": (str, "std"),
        "box_bound": (float, bench.BOX_BOUND),
        "warm_start": (bool, True),
        "warm_lambda": (float, None),
        "warm_tol": (float, None),
    },
    "suite": {
        "m": (int, None),
        "sizes": (str, ""),
        "replicates": (int, None),
        "methods": (str, ",".join(METHODS)),
        "full_scale": (bool, False),
    },
    "logreg": {
        "train": (str, ""),
        "test": (str, ""),
        "samples": (int, 500),
        "features": (int, 200),
        "s_true": (int, 10),
        "margin": (float, 0.5),
    },
}


class ConfigError(ValueError):
    pass


def _convert(typ, raw, where):
    if raw is None:
        return None
    if isinstance(raw, str):
        raw = raw.strip()
        if raw == "":
            return "" if typ is str else None
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {typ.__name__}, got {raw!r}") from None


def load_config(path):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}".splitlines()[0]) from None
    out = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            typ = SCHEMA[section][key][0]
            out[(section, key)] = _convert(typ, raw, f"{path} [{section}] {key}")
    return out


def effective_config(args, flag_map):
    cfg = {(sec, key): spec[1] for sec, keys in SCHEMA.items() for key, spec in keys.items()}
    if args.config:
        cfg.update(load_config(args.config))
    for dest, target in flag_map.items():
        value = getattr(args, dest, None)
        if value is not None:
            cfg[target] = value
    return cfg


def write_config(cfg, path):
    parser = configparser.ConfigParser(interpolation=None)
    for (sec, key), value in sorted(cfg.items()):
        if not parser.has_section(sec):
            parser.add_section(sec)
        parser.set(sec, key, "" if value is None else (repr(value) if isinstance(value, float) else str(value)))
    with open(path, "w") as fh:
        parser.write(fh)


def _fill(cfg, key, value):
    if cfg.get(key) is None:
        cfg[key] = value


def solver_config(cfg):
    rule = cfg[("solver", "stop_rule")]
    tol = cfg[("solver", "tol")]
    if rule not in ("rel_change", "inf_norm"):
        raise ConfigError(f"stop_rule must be rel_change or inf_norm, got {rule!r}")
    stop = StopRule.rel_change(tol) if rule == "rel_change" else StopRule.inf_norm(tol)
    return SolverConfig(
        lam=cfg[("solver", "lambda")], mu=cfg[("solver", "mu")], omega=cfg[("solver", "omega")],
        max_iter=cfg[("solver", "max_iter")], stop_rule=stop, tie_rule=cfg[("solver", "tie_rule")],
        rng_seed=cfg[("run", "seed")], ifb_beta=cfg[("solver", "ifb_beta")],
        nmapg_eta=cfg[("solver", "nmapg_eta")], nmapg_delta=cfg[("solver", "nmapg_delta")],
    )


def _fill_cs_defaults(cfg):
    _fill(cfg, ("solver", "lambda"), 0.3)
    _fill(cfg, ("solver", "tol"), 1e-5)
    _fill(cfg, ("solver", "stop_rule"), "rel_change")
    _fill(cfg, ("solver", "nmapg_eta"), 0.8)
    _fill(cfg, ("problem", "warm_lambda"), 0.1)
    _fill(cfg, ("problem", "warm_tol"), 1e-2)


def _fill_logreg_defaults(cfg):
    _fill(cfg, ("solver", "lambda"), 5e-5)
    _fill(cfg, ("solver", "tol"), 5e-4)
    _fill(cfg, ("solver", "stop_rule"), "inf_norm")
    _fill(cfg, ("solver", "nmapg_eta"), 0.6)
    _fill(cfg, ("problem", "warm_lambda"), 0.001)
    _fill(cfg, ("problem", "warm_tol"), 0.02)


def parse_kv(spec, keys):
    out = {}
    for part in spec.split(","):
        if not part.strip():
            continue
        k, sep, v = part.partition("=")
        k = k.strip()
        if not sep or k not in keys:
            raise ConfigError(f"bad generator spec {spec!r}; expected {','.join(f'{x}=...' for x in keys)}")
        try:
            out[k] = int(v)
        except ValueError:
            raise ConfigError(f"bad value for {k} in {spec!r}") from None
    missing = [k for k in keys if k not in out]
    if missing:
        raise ConfigError(f"generator spec {spec!r} lacks {', '.join(missing)}")
    return out


def parse_sizes(text):
    sizes = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        n, sep, s = part.partition(":")
        try:
            sizes.append((int(n), int(s)) if sep else (int(n), None))
        except ValueError:
            raise ConfigError(f"bad size {part!r}; expected n or n:s") from None
    out = []
    for n, s in sizes:
        out.extend([(n, s)] if s is not None else [(n, t) for t in bench.sparsity_levels(n)])
    return out


def _prepare_out(cfg):
    out = Path(cfg[("run", "out")])
    out.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out / "config.ini")
    return out


def _problem(cfg):
    """Build ``(objective, box, x0, kind, extra)`` for ``solve``."""
    p = lambda k: cfg[("problem", k)]  # noqa: E731
    seed = cfg[("run", "seed")]
    sources = [bool(p("gen_cs")), bool(p("matrix") or p("rhs")), bool(p("libsvm"))]
    if sum(sources) != 1:
        raise ConfigError("give exactly one problem source: --gen-cs, --matrix/--rhs, or --libsvm")
    extra = {}
    if p("libsvm"):
        _fill_logreg_defaults(cfg)
        X, y = l0io.load_libsvm(p("libsvm"), p("features") or None)
        obj = Logistic(X, y)
        extra["train_accuracy"] = lambda w: accuracy(X, y, w)
        x0 = np.zeros(obj.dimension)
        kind = "logreg"
    else:
        _fill_cs_defaults(cfg)
        if p("gen_cs"):
            spec = parse_kv(p("gen_cs"), ("m", "n", "s"))
            inst = bench.gen_cs_instance(spec["m"], spec["n"], spec["s"],
                                         bench.noise_std(p("noise"), p("noise_mode")), seed)
            A, b = inst.A, inst.b
            extra["x_true"] = inst.x_true
        else:
            if not (p("matrix") and p("rhs")):
                raise ConfigError("--matrix and --rhs must be given together")
            A = l0io.load_dense_matrix(p("matrix"))
            b = l0io.load_dense_matrix(p("rhs")).ravel()
        obj = LeastSquares(A, b)
        x0 = A.T @ b
        kind = "cs"
    box = BoxConstraint.uniform(obj.dimension, -p("box_bound"), p("box_bound"))
    x0 = np.clip(x0, box.lower, box.upper)
    return obj, box, x0, kind, extra


def cmd_solve(cfg):
    method = canonical_name(cfg[("solver", "method")])
    obj, box, x0, kind, extra = _problem(cfg)
    scfg = solver_config(cfg)
    out = _prepare_out(cfg)

    t0 = time.perf_counter()
    warm_iters = 0
    if cfg[("problem", "warm_start")]:
        wl, wt = cfg[("problem", "warm_lambda")], cfg[("problem", "warm_tol")]
        rule = StopRule.rel_change(wt) if kind == "cs" else StopRule.inf_norm(wt)
        warm = fista_l1(obj, wl, x0, stop_rule=rule, box=box)
        x0, warm_iters = warm.x_final, warm.iterations
    result = get_solver(method)(obj, box, scfg, x0)
    elapsed = time.perf_counter() - t0

    summary = {
        "method": method,
        "status": result.status.value,
        "iterations": result.iterations,
        "warm_start_iterations": warm_iters,
        "objective": result.trace.objective[-1] if len(result.trace) else result.trace.initial_objective,
        "l0_norm": int(np.count_nonzero(result.x_final)),
        "ncf": result.trace.total_ncf,
        "ncgf": result.trace.total_ncgf,
        "restarts": result.trace.restart_count,
        "lipschitz": obj.lipschitz(),
        "time": elapsed,
        "seed": cfg[("run", "seed")],
    }
    if "x_true" in extra:
        summary["relative_error"] = bench.relative_error(result.x_final, extra["x_true"])
    if "train_accuracy" in extra:
        summary["train_accuracy"] = extra["train_accuracy"](result.x_final)
    l0io.save_dense_matrix(out / "x_final.bin", result.x_final)
    with open(out / "result.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    l0io.write_trace_csv(result.trace, out / "trace.csv")
    print(f"{method}: {result.status.value} after {result.iterations} iterations, "
          f"H = {summary['objective']:.6g}, ||x||_0 = {summary['l0_norm']}")
    return EXIT_OK if result.converged else EXIT_MAX_ITER


def _write_report(report, out):
    l0io.write_report_csv(report, out / "report.csv")
    l0io.write_report_json(report, out / "report.json")
    print(bench.format_table(report))
    return EXIT_OK if not report.failures else EXIT_FAILED_CELLS


def cmd_bench_cs(cfg):
    _fill_cs_defaults(cfg)
    full = cfg[("suite", "full_scale")]
    _fill(cfg, ("suite", "m"), bench.FULL_M if full else bench.DESK_M)
    _fill(cfg, ("suite", "replicates"), 50 if full else 20)
    sizes = parse_sizes(cfg[("suite", "sizes")]) if cfg[("suite", "sizes")] else bench.default_sizes(full)
    methods = tuple(m for m in cfg[("suite", "methods")].split(",") if m.strip())
    suite = bench.CsSuiteConfig(
        m=cfg[("suite", "m")], sizes=tuple(sizes), replicates=cfg[("suite", "replicates")],
        methods=methods, solver=solver_config(cfg), noise=cfg[("problem", "noise")],
        noise_mode=cfg[("problem", "noise_mode")], warm_lam=cfg[("problem", "warm_lambda")],
        warm_tol=cfg[("problem", "warm_tol")], box_bound=cfg[("problem", "box_bound")],
        seed=cfg[("run", "seed")], keep_traces=False,
    )
    out = _prepare_out(cfg)
    return _write_report(bench.run_cs_suite(suite), out)


def cmd_bench_logreg(cfg):
    _fill_logreg_defaults(cfg)
    g = lambda k: cfg[("logreg", k)]  # noqa: E731
    if g("train") or g("test"):
        if not (g("train") and g("test")):
            raise ConfigError("give both train and test LIBSVM files")
        hint = cfg[("problem", "features")] or None
        Xtr, ytr = l0io.load_libsvm(g("train"), hint)
        Xte, yte = l0io.load_libsvm(g("test"), hint or Xtr.shape[1])
        if Xte.shape[1] != Xtr.shape[1]:
            raise ConfigError("train and test files have different feature counts; set [problem] features")
        dataset = bench.LogregDataset(Xtr, ytr, Xte, yte, name=Path(g("train")).stem)
    else:
        dataset = bench.gen_synthetic_logreg(g("samples"), g("features"), g("s_true"), g("margin"),
                                             cfg[("run", "seed")])
    methods = tuple(m for m in cfg[("suite", "methods")].split(",") if m.strip())
    suite = bench.LogregSuiteConfig(
        methods=methods, solver=solver_config(cfg), warm_lam=cfg[("problem", "warm_lambda")],
        warm_tol=cfg[("problem", "warm_tol")], box_bound=cfg[("problem", "box_bound")], keep_traces=False,
    )
    out = _prepare_out(cfg)
    return _write_report(bench.run_logreg_suite(dataset, suite), out)


def cmd_check(args):
    only = [s.strip() for s in args.only.split(",")] if args.only else None
    ok = True
    for res in checks.run_checks(only, inject_fault=args.inject_fault):
        print(res.line())
        for ce in res.counterexamples:
            print(f"    counterexample: {ce}")
        ok &= res.passed
    return EXIT_OK if ok else EXIT_ERROR


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


FLAGS = {
    "seed": ("run", "seed"), "out": ("run", "out"),
    "method": ("solver", "method"), "lam": ("solver", "lambda"), "mu": ("solver", "mu"),
    "omega": ("solver", "omega"), "max_iter": ("solver", "max_iter"), "tol": ("solver", "tol"),
    "tie_rule": ("solver", "tie_rule"),
    "gen_cs": ("problem", "gen_cs"), "matrix": ("problem", "matrix"), "rhs": ("problem", "rhs"),
    "libsvm": ("problem", "libsvm"), "noise_mode": ("problem", "noise_mode"),
    "warm_start": ("problem", "warm_start"),
    "replicates": ("suite", "replicates"), "sizes": ("suite", "sizes"), "m": ("suite", "m"),
    "methods": ("suite", "methods"), "full_scale": ("suite", "full_scale"),
    "train": ("logreg", "train"), "test": ("logreg", "test"),
}


def build_parser():
    parser = _Parser(prog="l0pk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--max-iter", type=int, metavar="N")
        p.add_argument("--tol", type=float, metavar="X")
        p.add_argument("--lambda", dest="lam", type=float, metavar="X")
        p.add_argument("--mu", type=float, metavar="X")
        p.add_argument("--omega", type=float, metavar="X")
        p.add_argument("--tie-rule", choices=("zero", "keep"))
        noise = p.add_mutually_exclusive_group()
        noise.add_argument("--noise-as-std", dest="noise_mode", action="store_const", const="std",
                           help="read the noise level as a standard deviation (default)")
        noise.add_argument("--noise-as-variance", dest="noise_mode", action="store_const", const="variance",
                           help="read the noise level as a variance")

    p = sub.add_parser("solve", help="solve one problem")
    common(p)
    p.add_argument("--method", metavar="NAME")
    p.add_argument("--gen-cs", metavar="m=M,n=N,s=S")
    p.add_argument("--matrix", metavar="PATH", help="L0PK dense matrix file for A")
    p.add_argument("--rhs", metavar="PATH", help="L0PK dense matrix file for b")
    p.add_argument("--libsvm", metavar="PATH", help="training data for sparse logistic regression")
    p.add_argument("--no-warm-start", dest="warm_start", action="store_const", const=False)

    for name, help_ in (("bench-cs", "compressive sensing suite"), ("bench-logreg", "logistic regression suite")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--replicates", type=int, metavar="N")
        p.add_argument("--methods", metavar="A,B,...")
        if name == "bench-cs":
            p.add_argument("--full-scale", action="store_const", const=True)
            p.add_argument("--sizes", metavar="n[:s],...")
            p.add_argument("--m", type=int, metavar="M")
        else:
            p.add_argument("--train", metavar="PATH")
            p.add_argument("--test", metavar="PATH")

    p = sub.add_parser("check", help="run the invariant suites")
    p.add_argument("--only", metavar="SUITE[,SUITE]")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "check":
            return cmd_check(args)
        cfg = effective_config(args, FLAGS)
        if args.command == "solve":
            return cmd_solve(cfg)
        if cfg.get(("suite", "replicates")) is not None and cfg[("suite", "replicates")] < 1:
            raise ConfigError(f"replicates must be at least 1, got {cfg[('suite', 'replicates')]}")
        if args.command == "bench-cs":
            return cmd_bench_cs(cfg)
        return cmd_bench_logreg(cfg)
    except KeyError as exc:
        print(f"l0pk: error: {exc.args[0]}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"l0pk: error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
