"""Benchmark protocol: simulate train/test replications, estimate with every method,
write relative-squared-error and averaged p-value tables.
"""
from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import HawkesModel
from .estimate import (
    DEFAULT_EPS_GRID,
    FitConfig,
    confidence_select,
    epsilon_sweep,
    fit,
    relative_squared_errors,
)
from .formats import model_to_dict, write_csv, write_json, write_signs
from .gof import gof_report
from .sim import SimConfig, simulate

log = logging.getLogger(__name__)

METHODS = ("MLE", "MLE-eps", "CfE", "CfSt", "Approx")


def n_workers() -> int:
    env = os.environ.get("HAWKES_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, min(cap, int(env)))
        except ValueError:
            pass
    return cap


def _simulate_one(args):
    model, n_events, seed = args
    return simulate(SimConfig(model, n_events=n_events, seed=seed))


def _replicate(args):
    model, r, n_events, seed, config = args
    train = simulate(SimConfig(model, n_events=n_events, seed=seed + r))
    mle = fit(train, config)
    approx = fit(train, replace(config, objective="approx"))
    return train, mle, approx


def _map(func, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def run_bench(model: HawkesModel, out_dir, replications: int = 25, n_events: int = 5000, seed: int = 0,
              config: FitConfig = FitConfig(), gamma: float = 0.1, candidate_eps=DEFAULT_EPS_GRID,
              workers=None) -> dict:
    """Run all estimation methods on ``replications`` simulated train sets.

    Train replication ``r`` uses seed ``seed + r``; test replication ``r`` uses
    ``seed + replications + r``.  Returns the summary also written to
    ``summary.json``.
    """
    out = Path(out_dir)
    (out / "replications").mkdir(parents=True, exist_ok=True)
    workers = n_workers() if workers is None else workers
    test = _map(
        _simulate_one,
        [(model, n_events, seed + replications + r) for r in range(replications)],
        workers,
    )
    results = _map(_replicate, [(model, r, n_events, seed, config) for r in range(replications)], workers)
    train = [t for t, _, _ in results]
    estimates = {"MLE": [m for _, m, _ in results], "Approx": [a for _, _, a in results]}

    for r, (_, mle, approx) in enumerate(results):
        write_json(
            {"replication": r, "seed": seed + r, "MLE": model_to_dict(mle.model, mle.to_dict()),
             "Approx": model_to_dict(approx.model, approx.to_dict())},
            out / "replications" / f"rep_{r:03d}.json",
        )

    scores, selections = epsilon_sweep(estimates["MLE"], train, test, candidate_eps, config)
    eps = max(scores, key=lambda e: (scores[e], e))
    estimates["MLE-eps"] = [sel.refit for sel in selections[eps]]
    supports = {"MLE-eps": np.mean([sel.support for sel in selections[eps]], axis=0)}

    for name, kind in (("CfE", "empirical"), ("CfSt", "student")):
        try:
            sel = confidence_select(estimates["MLE"], None, gamma, kind, config=config)
        except ValueError as exc:
            warnings.warn(f"{name} skipped: {exc}", RuntimeWarning, stacklevel=2)
            continue
        supports[name] = sel.support.astype(float)
        estimates[name] = [
            fit(seq, config, support=sel.support, init=m.model)
            for seq, m in zip(train, estimates["MLE"])
        ]

    rse_rows, p_rows, summary = [], [], {"epsilon": eps, "epsilon_scores": scores, "methods": {}}
    true_report = gof_report(model, test)
    p_rows.append(["True"] + [round(v, 6) for v in true_report.all_p.tolist()])
    for name in METHODS:
        if name not in estimates:
            continue
        errs = [relative_squared_errors(f.model, model) for f in estimates[name]]
        for r, e in enumerate(errs):
            rse_rows.append([name, r, e["mu"], e["alpha"], e["beta"]])
        reports = [gof_report(f.model, test) for f in estimates[name]]
        p_mean = np.mean([rep.all_p for rep in reports], axis=0)
        p_rows.append([name] + [round(v, 6) for v in p_mean.tolist()])
        mean_alpha = np.mean([f.model.alpha for f in estimates[name]], axis=0)
        summary["methods"][name] = {
            "median_rse": {g: float(np.median([e[g] for e in errs])) for g in ("mu", "alpha", "beta")},
            "p_values": p_mean.tolist(),
            "mean_alpha": mean_alpha.tolist(),
            "signs": np.sign(mean_alpha).astype(int).tolist(),
        }
        if name in supports:
            summary["methods"][name]["support_frequency"] = supports[name].tolist()
        write_signs(mean_alpha, out / f"signs_{name}.csv")
    summary["true_p_values"] = true_report.all_p.tolist()
    d = model.d
    write_csv(["method", "replication", "rse_mu", "rse_alpha", "rse_beta"], rse_rows, out / "rse.csv")
    write_csv(["method"] + [f"p_{i + 1}" for i in range(d)] + ["p_tot"], p_rows, out / "pvalues.csv")
    write_json(summary, out / "summary.json")
    return summary
