"""Command-line front end.

Exit codes: 0 success, 1 domain error (JSON record on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .exceptions import LeastErrorError, NumericallySingular
from .harness import RuleConfig, rate_study, stability_study
from .kappa import kappa_auto, kappa_table
from .l1solver import solve_least_error
from .problems import make_denoising, make_random_sparse, make_singular_basis, with_noise
from .rules import run_apriori, run_discrepancy, run_monotone_error
from .source import check_source_condition, strictify_source


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text!r}") from exc


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")


def cmd_gen(args):
    if args.kind == "denoise":
        if args.f is None:
            raise UsageError("--kind denoise needs --f")
        inst, fam = make_denoising(len(args.f), args.f)
    elif args.kind == "singular":
        if args.sigmas is None:
            raise UsageError("--kind singular needs --sigmas")
        inst, fam = make_singular_basis(args.sigmas, seed=args.seed, orthonormal=not args.diagonal)
    else:
        if args.m is None or args.N is None:
            raise UsageError("--kind random needs --m and --N")
        inst, fam = make_random_sparse(args.m, args.N, args.k, seed=args.seed)
    if args.delta:
        inst = with_noise(inst, args.delta, args.seed)
    _emit(serialize.dumps(serialize.problem_to_dict(inst, fam)), args.out)
    return 0


def _kappas(inst, fam, n_max, seed):
    return kappa_table(inst, fam, n_max, seed=seed)


def cmd_solve(args):
    inst, fam = serialize.load_problem(args.problem)
    rule = args.rule or ("fixed" if args.n is not None else None)
    if rule is None:
        raise UsageError("give --n for a fixed level or --rule")
    outcome = None
    if rule == "fixed":
        if args.n is None:
            raise UsageError("--rule fixed needs --n")
        res = solve_least_error(inst, fam, args.n)
    else:
        n_max = args.n_max or fam.n_max
        kappas = _kappas(inst, fam, n_max, args.seed) if (rule == "apriori" or args.trace) else None
        if rule == "apriori":
            outcome = run_apriori(inst, fam, kappas, theta=args.theta)
        elif rule == "me":
            outcome = run_monotone_error(inst, fam, n_max=n_max, kappas=kappas)
        else:
            outcome = run_discrepancy(inst, fam, tau=args.tau, n_max=n_max, kappas=kappas)
        res = outcome.result
    doc = serialize.result_to_dict(res)
    if outcome is not None:
        doc["rule"] = outcome.rule
        doc["terminated"] = outcome.terminated
        if args.trace:
            Path(args.trace).write_text(outcome.trace_csv())
    _emit(serialize.dumps(doc), args.out)
    if outcome is not None and not outcome.terminated:
        sys.stderr.write(json.dumps({"error": "NotTriggered",
                                     "message": f"{outcome.rule} rule did not trigger up to n_max"}) + "\n")
        return 1
    return 0


def cmd_kappa(args):
    inst, fam = serialize.load_problem(args.problem)
    n_max = args.n_max or fam.n_max
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "value", "method", "certified"])
    for n in range(1, n_max + 1):
        k = kappa_auto(inst, fam, n, restarts=args.restarts, seed=args.seed)
        w.writerow([k.n, repr(k.value), k.method, str(k.certified).lower()])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_check_source(args):
    inst, fam = serialize.load_problem(args.problem)
    cert = check_source_condition(inst)
    if cert is not None and args.strict:
        cert = strictify_source(inst, None, cert)
    _emit(serialize.dumps(None if cert is None else serialize.certificate_to_dict(cert)), args.out)
    return 0


def cmd_rate_study(args):
    inst, fam = serialize.load_problem(args.problem)
    if not args.deltas:
        raise UsageError("--deltas must list at least one noise level")
    config = RuleConfig(rule=args.rule or "fixed", n=args.n, theta=args.theta, tau=args.tau,
                        n_max=args.n_max)
    seeds = range(args.seed, args.seed + args.trials)
    table = rate_study(inst, fam, args.deltas, config, seeds=seeds)
    _emit(table.to_csv(), args.out)
    summary = serialize.dumps(table.summary)
    if args.summary:
        _emit(summary, args.summary)
    elif args.out and args.out != "-":
        _emit(summary, str(Path(args.out).with_suffix(".summary.json")))
    else:
        sys.stderr.write(summary + "\n")
    return 0


def cmd_stability_study(args):
    inst, fam = serialize.load_problem(args.problem)
    if args.n is None:
        raise UsageError("stability-study needs --n")
    table = stability_study(inst, fam, args.n, trials=args.trials, seed=args.seed)
    _emit(serialize.dumps(table.summary()), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="least-error",
                                description="Least error discretization for sparse l1 reconstruction.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, problem=True):
        if problem:
            sp.add_argument("--problem", required=True, help="problem JSON")
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        sp.add_argument("--seed", type=int, default=0)

    def level_flags(sp):
        sp.add_argument("--n", type=int, default=None, help="fixed discretization level")
        sp.add_argument("--rule", choices=["fixed", "apriori", "me", "dp"], default=None)
        sp.add_argument("--theta", type=float, default=1.0)
        sp.add_argument("--tau", type=float, default=2.0)
        sp.add_argument("--n-max", dest="n_max", type=int, default=None)

    g = sub.add_parser("gen", help="generate a synthetic problem")
    common(g, problem=False)
    g.add_argument("--kind", choices=["denoise", "singular", "random"], required=True)
    g.add_argument("--f", type=_floats, default=None, help="denoising data")
    g.add_argument("--sigmas", type=_floats, default=None, help="singular values")
    g.add_argument("--diagonal", action="store_true", help="singular basis = canonical basis")
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--N", type=int, default=None)
    g.add_argument("--k", type=int, default=2, help="sparsity of the random solution")
    g.add_argument("--delta", type=float, default=0.0, help="add noise of this exact size")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve at a fixed or rule-selected level")
    common(s)
    level_flags(s)
    s.add_argument("--trace", default=None, help="write the rule trace CSV here")
    s.set_defaults(func=cmd_solve)

    k = sub.add_parser("kappa", help="stability constants as CSV")
    common(k)
    k.add_argument("--n-max", dest="n_max", type=int, default=None)
    k.add_argument("--restarts", type=int, default=50)
    k.set_defaults(func=cmd_kappa)

    c = sub.add_parser("check-source", help="source element of largest margin")
    common(c)
    c.add_argument("--strict", action="store_true", help="strictify the certificate")
    c.set_defaults(func=cmd_check_source)

    r = sub.add_parser("rate-study", help="error vs noise level")
    common(r)
    level_flags(r)
    r.add_argument("--deltas", type=_floats, required=True)
    r.add_argument("--trials", type=int, default=5, help="noise seeds per delta")
    r.add_argument("--summary", default=None, help="summary JSON path")
    r.set_defaults(func=cmd_rate_study)

    t = sub.add_parser("stability-study", help="check the stability estimates")
    common(t)
    t.add_argument("--n", type=int, default=None)
    t.add_argument("--trials", type=int, default=50)
    t.set_defaults(func=cmd_stability_study)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return 2
    except LeastErrorError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 1
    except (ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
