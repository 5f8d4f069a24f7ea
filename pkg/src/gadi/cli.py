"""Command-line interface: ``gadi <command> [options]``.

Commands: gen, solve, traverse, gpr-fit, gpr-predict, reproduce.

Any option can also come from ``--config file.json`` (keys are option names
with dashes replaced by underscores); explicit flags win and unknown keys are
rejected. Relative output paths resolve against ``--out-dir``, which defaults
to ``$GADI_OUTPUT_DIR`` or the current directory.

Exit codes: 0 success, 1 numerical failure (including non-convergence),
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .core import validate_alpha_omega
from .exceptions import ConfigError, GadiError
from .gpr import GprModel, fit
from .harness import (DEFAULT_CAP, FAMILIES, METHODS, ProblemInstance, make_problem,
                      read_training_csv, run_method, traverse)
from .params import gadi_hs_params, hss_alpha, summarize_spectrum

log = logging.getLogger("gadi")

ENV_OUT_DIR = "GADI_OUTPUT_DIR"
EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

# reference rows: (method, n, r, alpha, omega, iterations)
REFERENCE = {
    "t4.1": [("hss", 8, 0, 2.0521, 0.0, 37), ("gadi-hs", 8, 0, 0.6208, 1.0, 29),
             ("hss", 12, 0, 1.4359, 0.0, 52), ("gadi-hs", 12, 0, 0.4468, 1.0, 39),
             ("hss", 16, 0, 1.1025, 0.0, 66), ("gadi-hs", 16, 0, 0.3465, 1.0, 48)],
    "t4.2": [("ihss", 32, 0, 0.93, 0.0, 185), ("practical-gadi-hs", 32, 0, 0.0699, 1.9, 23)],
    "sylvester": [("gadi-ab", 16, 0.01, 1.18, 0.0, 12), ("gadi-ab", 16, 0.1, 1.18, 0.0, 12),
                  ("gadi-ab", 16, 1.0, 1.87, 0.0, 8), ("gadi-ab", 32, 0.01, 0.62, 0.0, 22),
                  ("gadi-ab", 32, 0.1, 0.65, 0.0, 21), ("gadi-ab", 32, 1.0, 1.28, 0.1, 12)],
    "a4": [("hss", 16, 0, 0.6156, 0.0, 77), ("gadi-hs", 16, 0, 0.1158, 1.0, 37),
           ("hss", 32, 0, 0.3050, 0.0, 140), ("gadi-hs", 32, 0, 0.0603, 1.0, 64)],
}
TABLE_FAMILY = {"t4.1": "convdiff3d", "t4.2": "convdiff3d", "sylvester": "sylvester",
                "a4": "parabolic2d"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_problem(p, d):
    p.add_argument("--family", choices=FAMILIES, help="problem family")
    p.add_argument("--n", type=int, help="grid size per dimension")
    p.add_argument("--r", type=float, default=d(0.0), help="Sylvester dominance parameter")
    p.add_argument("--rhs", choices=("identity", "manufactured"), default=d("identity"),
                   help="Sylvester right-hand side")
    p.add_argument("--problem-dir", help="load a problem written by 'gen' instead")


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    kw = {"argument_default": argparse.SUPPRESS} if suppress else {}

    def d(value):
        # suppressed defaults reveal which options were given explicitly
        return argparse.SUPPRESS if suppress else value

    parser = _Parser(prog="gadi", description="GADI splitting solvers", **kw)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False, **kw)
    common.add_argument("--config", help="JSON file of option values")
    common.add_argument("--out-dir", help=f"output directory (default ${ENV_OUT_DIR} or .)")
    common.add_argument("-v", "--verbose", action="count", default=d(0))
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write a problem as Matrix Market files", **kw)
    _add_problem(p, d)
    p.add_argument("--out", help="directory to write (default <family>_n<n>)")

    p = sub.add_parser("solve", parents=[common], help="run a solver and write a JSON report", **kw)
    _add_problem(p, d)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--param-source", choices=("explicit", "theory", "gpr"))
    p.add_argument("--model", help="GPR model JSON (param-source gpr)")
    p.add_argument("--delta-h", type=int, default=d(2))
    p.add_argument("--delta-s", type=int, default=d(2))
    p.add_argument("--tol", type=float, default=d(1e-6))
    p.add_argument("--max-outer", type=int, default=d(DEFAULT_CAP))
    p.add_argument("--out", help="report path (default report.json)")

    p = sub.add_parser("traverse", parents=[common], help="grid search over (alpha, omega)", **kw)
    _add_problem(p, d)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--alpha-grid", type=float, nargs=3, metavar=("LO", "HI", "STEP"),
                   default=d([0.01, 3.0, 0.01]))
    p.add_argument("--omega-grid", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    p.add_argument("--omega", type=float, default=d(0.0))
    p.add_argument("--cap", type=int, default=d(DEFAULT_CAP))
    p.add_argument("--prune", action="store_true", default=d(False))
    p.add_argument("--jobs", type=int, default=d(1))
    p.add_argument("--delta-h", type=int, default=d(2))
    p.add_argument("--delta-s", type=int, default=d(2))
    p.add_argument("--out", help="CSV path (default traversal.csv)")

    p = sub.add_parser("gpr-fit", parents=[common], help="fit a GPR model to an n,alpha CSV", **kw)
    p.add_argument("--train", help="training CSV with header n,alpha")
    p.add_argument("--noise", type=float, default=d(1e-4))
    p.add_argument("--restarts", type=int, default=d(8))
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--no-rescale", action="store_true", default=d(False))
    p.add_argument("--retrain", type=float, nargs="*", default=d([]),
                   help="inputs to add as predicted pseudo-observations")
    p.add_argument("--out", help="model path (default model.json)")

    p = sub.add_parser("gpr-predict", parents=[common], help="predict alpha at sizes n", **kw)
    p.add_argument("--model")
    p.add_argument("--n", type=float, nargs="*", default=d([]))
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("reproduce", parents=[common], help="rerun a reference table", **kw)
    p.add_argument("--table", help=f"one of {', '.join(REFERENCE)}")
    p.add_argument("--max-n", type=int, default=d(32))
    p.add_argument("--out", help="CSV path (default stdout)")
    return parser


def _merge_config(args, argv):
    if not getattr(args, "config", None):
        return args
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    with open(args.config) as fh:
        conf = json.load(fh)
    if not isinstance(conf, dict):
        raise UsageError("config file must hold a JSON object")
    known = vars(args)
    for key, value in conf.items():
        key = key.replace("-", "_")
        if key not in known or key in ("command", "config"):
            raise UsageError(f"unknown config key {key!r}")
        if key not in explicit:
            setattr(args, key, value)
    return args


def _out_path(args, default):
    base = Path(args.out_dir or os.environ.get(ENV_OUT_DIR) or ".")
    name = getattr(args, "out", None) or default
    path = Path(name)
    return path if path.is_absolute() else base / path


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _problem(args) -> ProblemInstance:
    if args.problem_dir:
        return ProblemInstance.load(args.problem_dir)
    _need(args, "family", "n")
    return make_problem(args.family, args.n, args.r, args.rhs)


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_gen(args):
    _need(args, "family", "n")
    prob = make_problem(args.family, args.n, args.r, args.rhs)
    out = _out_path(args, f"{args.family}_n{args.n}")
    for p in prob.export(out):
        print(p)
    return EXIT_OK


def resolve_parameters(args, prob):
    """Return ``(alpha, omega, provenance)`` for ``solve``."""
    source = args.param_source or ("gpr" if args.model else "explicit")
    if source != "explicit" and args.alpha is not None:
        raise UsageError(f"--alpha conflicts with --param-source {source}")
    if source == "explicit":
        _need(args, "alpha")
        omega = args.omega if args.omega is not None else {"hss": 0.0, "ihss": 0.0}.get(args.method, 1.0)
        return args.alpha, omega, {"source": "explicit"}
    if source == "theory":
        if prob.is_sylvester:
            raise UsageError("theory parameters are defined for linear systems only")
        s = summarize_spectrum(prob.A)
        prov = {"source": "theory", "summary": json.loads(s.to_json())}
        if args.method in ("hss", "ihss"):
            return hss_alpha(s), 0.0, prov
        alpha, omega = gadi_hs_params(s)
        if args.omega is not None:
            omega = args.omega
        return alpha, omega, prov
    _need(args, "model")
    model = GprModel.load(args.model)
    pred = model.predict(prob.n)
    omega = args.omega if args.omega is not None else 1.9
    return pred.mean, omega, {"source": "gpr", "model": str(args.model),
                              "ci": [pred.ci_low, pred.ci_high]}


def cmd_solve(args):
    _need(args, "method")
    if args.alpha is not None:
        validate_alpha_omega(args.alpha, args.omega if args.omega is not None else 0.0)
    prob = _problem(args)
    alpha, omega, prov = resolve_parameters(args, prob)
    validate_alpha_omega(alpha, omega)
    rep = run_method(prob, args.method, alpha, omega, max_outer=args.max_outer,
                     delta_h=args.delta_h, delta_s=args.delta_s, outer_rel_tol=args.tol)
    doc = rep.to_dict()
    doc["parameters"] = {"alpha": alpha, "omega": rep.omega, **prov}
    doc["config"] = {k: v for k, v in vars(args).items() if k != "verbose"}
    doc["problem"] = prob.metadata()
    out = _out_path(args, "report.json")
    _write_text(out, json.dumps(doc, indent=2) + "\n")
    print(f"{args.method}: IT={rep.iterations} RES={rep.residual_history[-1]:.3e} "
          f"({rep.termination}) alpha={alpha:.6g} omega={rep.omega:g} -> {out}")
    return EXIT_OK if rep.converged else EXIT_NUMERIC


def cmd_traverse(args):
    _need(args, "method")
    prob = _problem(args)
    opts = {}
    if args.method in ("practical-gadi-hs", "ihss"):
        opts = {"delta_h": args.delta_h, "delta_s": args.delta_s}
    res = traverse(prob, args.method, tuple(args.alpha_grid),
                   tuple(args.omega_grid) if args.omega_grid else None,
                   omega=args.omega, cap=args.cap, prune=args.prune, jobs=args.jobs, **opts)
    out = _out_path(args, "traversal.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    res.to_csv(out)
    print(f"best alpha={res.best_alpha:g} omega={res.best_omega:g} IT={res.best_it} -> {out}")
    return EXIT_OK


def cmd_gpr_fit(args):
    _need(args, "train")
    pairs = read_training_csv(args.train)
    model = fit([p[0] for p in pairs], [p[1] for p in pairs], noise=args.noise,
                restarts=args.restarts, seed=args.seed, rescale=not args.no_rescale)
    if args.retrain:
        from .gpr import retrain
        model = retrain(model, args.retrain)
    out = _out_path(args, "model.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    print(f"iota={model.iota:.6g} sigma_f={model.sigma_f:.6g} -> {out}")
    return EXIT_OK


def cmd_gpr_predict(args):
    _need(args, "model")
    model = GprModel.load(args.model)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "mean", "ci_low", "ci_high"])
    for n in args.n:
        p = model.predict(n)
        w.writerow([repr(float(n)), repr(p.mean), repr(p.ci_low), repr(p.ci_high)])
    _write_text(_out_path(args, args.out) if args.out else None, buf.getvalue())
    return EXIT_OK


def cmd_reproduce(args):
    _need(args, "table")
    if args.table not in REFERENCE:
        raise UsageError(f"unknown table {args.table!r}; valid ids: {', '.join(REFERENCE)}")
    family = TABLE_FAMILY[args.table]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "n", "r", "alpha", "omega", "it", "ref_it", "theory_alpha"])
    cache = {}
    for method, n, r, alpha, omega, ref_it in REFERENCE[args.table]:
        if n > args.max_n:
            continue
        key = (n, r)
        if key not in cache:
            cache[key] = make_problem(family, n, r)
        prob = cache[key]
        rep = run_method(prob, method, alpha, omega)
        theory = ""
        if args.table in ("t4.1", "a4"):
            s = summarize_spectrum(prob.A)
            theory = hss_alpha(s) if method == "hss" else gadi_hs_params(s)[0]
            theory = f"{theory:.4f}"
        w.writerow([method, n, r, alpha, omega, rep.iterations, ref_it, theory])
        log.info("%s n=%d done", method, n)
    _write_text(_out_path(args, args.out) if args.out else None, buf.getvalue())
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "traverse": cmd_traverse,
            "gpr-fit": cmd_gpr_fit, "gpr-predict": cmd_gpr_predict, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        args = _merge_config(args, argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"gadi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GadiError, ArithmeticError, OSError, ValueError) as exc:
        print(f"gadi: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
