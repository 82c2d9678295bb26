"""Command-line entry point: ``inhibhawkes {simulate,fit,select,gof,bench}``.

Exit codes: 0 success, 2 usage error, 3 invalid data or model, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .core import HawkesError, NumericalError
from .estimate import (
    DEFAULT_EPS_GRID,
    FitConfig,
    FitResult,
    SupportSelection,
    choose_epsilon,
    confidence_select,
    fit,
    resample_concatenate,
    split_windows,
    threshold_select,
)
from .formats import read_events, read_model, write_csv, write_events, write_json, write_model, write_signs
from .gof import gof_report
from .sim import SCENARIOS, SimConfig, scenario, simulate

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


def _load_model(source: str):
    if source in SCENARIOS:
        return scenario(source)
    return read_model(source)


def _load_events(paths, d=None):
    seqs = [read_events(p, d=d) for p in paths]
    dims = {s.d for s in seqs}
    if d is None and len(dims) > 1:
        # files may omit high marks; align everything on the largest dimension
        d = max(dims)
        seqs = [read_events(p, d=d) for p in paths]
    return seqs


def _fit_config(args, **over) -> FitConfig:
    kw = dict(restarts=args.restarts, seed=args.seed)
    kw.update(over)
    return FitConfig(**kw)


def _fit_meta(result: FitResult, **extra) -> dict:
    meta = result.to_dict()
    meta.pop("model", None)
    meta.update(extra)
    return meta


def cmd_simulate(args):
    model = _load_model(args.model)
    if args.events is not None and args.events < 1:
        raise HawkesError("--events must be >= 1")
    seq = simulate(SimConfig(model, n_events=args.events, horizon=args.horizon, seed=args.seed))
    write_events(seq, args.out)
    print(f"wrote {len(seq)} events on [0, {seq.horizon:.6g}] to {args.out}")


def cmd_fit(args):
    seqs = _load_events(args.events)
    result = fit(seqs, _fit_config(args, objective=args.objective))
    write_model(result.model, args.out, _fit_meta(result, files=[str(p) for p in args.events]))
    status = "converged" if result.converged else "NOT converged"
    print(f"loglik {result.loglik:.6f} ({status}); model written to {args.out}")


def _realisations(args, seqs):
    """Independent realisations for CfE/CfSt: one per file, or cut/resampled from fewer files."""
    if args.window is not None:
        seqs = [w for s in seqs for w in split_windows(s, args.window)]
    if args.resample is not None:
        seqs = resample_concatenate(seqs, args.resample, args.reps, seed=args.seed, window=args.window)
    if len(seqs) < 2:
        raise UsageError(f"--method {args.method} needs several realisations: pass several events files, "
                         "--window to cut one record, or --resample")
    return seqs


def cmd_select(args):
    base = read_model(args.model)
    seqs = _load_events(args.events, d=base.d)
    config = _fit_config(args)
    if args.method == "eps":
        level = args.level
        fitted = FitResult(base, float("nan"), True, 0, np.full(base.d, np.nan), np.ones(base.d, bool))
        if level == "auto":
            if not args.test:
                raise UsageError("--level auto needs --test events files")
            test = _load_events(args.test, d=base.d)
            level = choose_epsilon([fitted], [seqs], test, DEFAULT_EPS_GRID, config, q=args.q)
        level = float(level)
        if level == 0.0:
            # nothing has cumulative mass < 0: full support, plain refit
            support = np.ones((base.d, base.d), dtype=bool)
            sel = SupportSelection(support, "mle_eps", 0.0, fit(seqs, config, support=support, init=base))
        else:
            sel = threshold_select(fitted, seqs, level, config)
    else:
        gamma = 0.1 if args.level == "auto" else float(args.level)
        reals = _realisations(args, seqs)
        fits = [fit(s, config, init=base) for s in reals]
        kind = "empirical" if args.method == "cfe" else "student"
        sel = confidence_select(fits, reals, gamma, kind, q=args.q, config=config)
    meta = _fit_meta(sel.refit, method=sel.method, level=sel.level, support=sel.support.tolist())
    if sel.pvalues is not None:
        meta["pvalues"] = np.asarray(sel.pvalues).tolist()
    write_model(sel.refit.model, args.out, meta)
    support_path = args.support or str(Path(args.out).with_suffix(".support.csv"))
    write_signs(sel.signs(), support_path)
    print(f"{sel.method} level {sel.level:g}: kept {int(sel.support.sum())}/{sel.support.size} interactions; "
          f"model {args.out}, signs {support_path}")


def cmd_gof(args):
    model = read_model(args.model)
    seqs = _load_events(args.events, d=model.d)
    report = gof_report(model, seqs, q=args.level, include_first=args.include_first)
    write_json(report.to_dict(), args.out)
    csv_path = args.csv or str(Path(args.out).with_suffix(".csv"))
    write_csv(["hypothesis", "p", "threshold", "rejected"], report.ordered_rows(), csv_path)
    for name, p, thr, rej in report.ordered_rows():
        print(f"{name:6s} p={p:.4f} threshold={thr:.4f} {'REJECT' if rej else 'keep'}")


def cmd_bench(args):
    from .bench import run_bench

    model = scenario(args.scenario, args.model_file)
    config = FitConfig(restarts=args.restarts, seed=args.seed)
    summary = run_bench(model, args.out, args.replications, args.events, args.seed, config, args.gamma)
    for name, res in summary["methods"].items():
        p = ", ".join(f"{v:.3f}" for v in res["p_values"])
        rse = res["median_rse"]
        print(f"{name:8s} p=({p})  median RSE mu={rse['mu']:.3g} alpha={rse['alpha']:.3g} beta={rse['beta']:.3g}")
    print(f"results in {args.out}")


def _level(text):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None
    if not 0 <= value < 1:
        raise argparse.ArgumentTypeError("level must lie in [0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inhibhawkes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an events file")
    p.add_argument("model", help="model JSON file or scenario name (S1, S2, S3)")
    stop = p.add_mutually_exclusive_group(required=True)
    stop.add_argument("--events", type=int)
    stop.add_argument("--horizon", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum likelihood fit on one or more events files")
    p.add_argument("events", nargs="+")
    p.add_argument("--objective", choices=("exact", "approx"), default="exact")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="interaction support selection and refit")
    p.add_argument("model", help="unconstrained fit (model JSON) used as starting point")
    p.add_argument("events", nargs="+")
    p.add_argument("--method", choices=("eps", "cfe", "cfst"), required=True)
    p.add_argument("--level", type=_level, default="auto", help="epsilon or gamma, or 'auto'")
    p.add_argument("--test", nargs="*", default=[], help="held-out events files for --level auto")
    p.add_argument("--q", type=float, default=None, help="BH level (default 0.05 for eps, gamma otherwise)")
    p.add_argument("--window", type=float, help="cut each record into windows of this length")
    p.add_argument("--resample", type=int, metavar="K", help="concatenate K random realisations")
    p.add_argument("--reps", type=int, default=20, help="number of resampled sequences")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--support", help="signs CSV path (default: <out>.support.csv)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("gof", help="time-rescaling goodness of fit")
    p.add_argument("model")
    p.add_argument("events", nargs="+")
    p.add_argument("--level", type=float, default=0.05, help="BH level q")
    p.add_argument("--include-first", action="store_true", help="also test the first increment from 0")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="ordered p-value CSV (default: <out>.csv)")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("bench", help="simulation benchmark over all estimators")
    p.add_argument("--scenario", choices=("S1", "S2", "S3", "D10-spec"), required=True)
    p.add_argument("--model-file", help="model JSON for D10-spec")
    p.add_argument("--replications", type=int, default=25)
    p.add_argument("--events", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "gof" and not 0 <= args.level <= 1:
        parser.print_usage(sys.stderr)
        print("error: --level must lie in [0, 1]", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "select" and args.q is None and args.method == "eps":
        args.q = 0.05
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (HawkesError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
