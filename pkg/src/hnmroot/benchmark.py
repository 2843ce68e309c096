"""Seeded simulation suites: causal direction on pairs and root-cause ranking."""

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import keyed_rng
from .graph import skeleton_stable
from .metrics import patients_from_shapley, rbo, shapley_mse, weighted_pair_accuracy
from .ordering import causal_direction, extract_errors
from .shapley import fit_logodds, tree_shap
from .simgen import generate, ground_truth_shapley, sample_pair, sample_spec

__all__ = [
    "PAIR_CELLS",
    "ResultRow",
    "root_cause_pipeline",
    "pair_trial",
    "rootcause_trial",
    "run_suite",
    "rows_to_csv",
    "worker_count",
]

PAIR_CELLS = (
    ("LiNGAM", False),
    ("ANM", False),
    ("ANM", True),
    ("HNM", False),
    ("HNM", True),
    ("PNL", False),
    ("PNL", True),
)
_FAMILY_ID = {"LiNGAM": 0, "ANM": 1, "HNM": 2, "PNL": 3}


@dataclass(frozen=True)
class ResultRow:
    config: str
    metric: str
    value: float
    seed: int


def worker_count():
    """Pool size from ``HNM_THREADS`` (default 1)."""
    raw = os.environ.get("HNM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cell_name(family, gaussian):
    return f"{family}-{'gauss' if gaussian else 'nongauss'}"


def pair_trial(family, gaussian, rep, n=1000, seed=0, k=10):
    """Draw one pair and report whether the recovered direction is correct."""
    rng = keyed_rng(seed, 0x5041, _FAMILY_ID[family], int(gaussian), rep)
    x, y, truth = sample_pair(family, n, rng, gaussian=gaussian)
    return str(causal_direction(x, y, rng=keyed_rng(seed, 0x4443, rep), k=k)) == truth


def root_cause_pipeline(X, d, alpha=0.1, max_cond=3, k=10, seed=0, test=None, boost=None):
    """Skeleton, error extraction, boosted log-odds model and attributions.

    Returns the extraction result, the fitted model and the attribution
    matrix for the ``test`` rows (all rows by default).
    """
    skel = skeleton_stable(X, alpha=alpha, max_cond=max_cond, rng=seed, k=k)
    extracted = extract_errors(X, skel, rng=seed, k=k)
    E = extracted.errors
    model = fit_logodds(E, d, boost)
    rows = np.arange(E.shape[0]) if test is None else np.asarray(test)
    return extracted, model, tree_shap(model, E[rows])


def rootcause_trial(p, n, rep, seed=0, model="hnm", alpha=0.1, max_cond=3, k=10,
                    truth_samples=50_000):
    """One simulated dataset scored against reference attributions.

    The model is fit on every row.  Metrics are reported over the diseased
    rows (``d == 1``), for which root causes are defined, and over all rows
    with an ``_all`` suffix.
    """
    spec = sample_spec(p, rng=keyed_rng(seed, 0x5350, p, n, rep), model=model)
    data = generate(spec, n, keyed_rng(seed, 0x4441, p, n, rep))
    _, _, S = root_cause_pipeline(data.X, data.d, alpha=alpha, max_cond=max_cond, k=k,
                                  seed=int(keyed_rng(seed, 0x4752, p, n, rep).integers(2**32)))
    truth = ground_truth_shapley(spec, data.true_errors, keyed_rng(seed, 0x4754, p, n, rep),
                                 n_samples=truth_samples)
    sick = data.d == 1
    est, ref = S.values, truth.values
    return {
        "rbo": float(rbo(patients_from_shapley(est[sick], ref[sick]))),
        "mse": shapley_mse(est[sick], ref[sick]),
        "rbo_all": float(rbo(patients_from_shapley(est, ref))),
        "mse_all": shapley_mse(est, ref),
    }


def _pair_job(args):
    return pair_trial(*args)


def _rootcause_job(args):
    return rootcause_trial(*args)


def _map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_suite(suite, reps, p=10, n=None, seed=0, alpha=0.1, max_cond=3, k=10, workers=None):
    """Run a benchmark suite and return its result rows.

    Parameters
    ----------
    suite : {"pairs", "rootcause", "pnl"}
        "pairs" reports the accuracy of each family and error-type cell.
        "rootcause" and "pnl" report per-replication and mean RBO and MSE on
        heteroscedastic and post-nonlinear SEMs respectively.
    reps : int
        Replications per cell.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    workers = worker_count() if workers is None else workers
    rows = []
    if suite == "pairs":
        n = 1000 if n is None else n
        for family, gaussian in PAIR_CELLS:
            jobs = [(family, gaussian, r, n, seed, k) for r in range(reps)]
            ok = _map(_pair_job, jobs, workers)
            rows.append(ResultRow(f"{cell_name(family, gaussian)} n={n}", "accuracy",
                                  weighted_pair_accuracy(ok), seed))
        return rows
    if suite not in ("rootcause", "pnl"):
        raise ValueError(f"unknown suite {suite!r}")
    n = 2000 if n is None else n
    model = "hnm" if suite == "rootcause" else "pnl"
    jobs = [(p, n, r, seed, model, alpha, max_cond, k) for r in range(reps)]
    results = _map(_rootcause_job, jobs, workers)
    config = f"{suite} p={p} n={n}"
    for r, res in enumerate(results):
        for metric, value in res.items():
            rows.append(ResultRow(f"{config} rep={r}", metric, value, seed))
    for metric in results[0]:
        rows.append(ResultRow(config, f"mean_{metric}",
                              float(np.mean([res[metric] for res in results])), seed))
    return rows


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config", "metric", "value", "seed"])
    for row in rows:
        w.writerow([row.config, row.metric, repr(float(row.value)), row.seed])
    return buf.getvalue()
