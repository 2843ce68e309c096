"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import ATTRIBUTION_GAPS, random_ensemble, record_criterion

from hnmroot._rng import keyed_rng
from hnmroot.benchmark import PAIR_CELLS, cell_name, run_suite
from hnmroot.graph import Skeleton
from hnmroot.metrics import RankedPatient, modified_rbo, rbo
from hnmroot.numkit import SplineBasis, fit_spline_loocv
from hnmroot.ordering import extract_errors
from hnmroot.shapley import exact_tree_shap, tree_shap
from hnmroot.simgen import (
    NON_GAUSSIAN,
    generate,
    noise_scale,
    nonlinearity,
    sample_error,
    sample_spec,
)
from hnmroot.stats import knn_mi

GATED_CELLS = [("LiNGAM", False), ("ANM", False), ("ANM", True), ("HNM", False), ("HNM", True)]
REFERENCE_RBO, REFERENCE_MSE = 0.809, 0.104


def test_criterion_01_tree_shap_matches_enumeration():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        model, E, _ = random_ensemble(seed, n=200)
        assert len(model.trees) <= 20 and model.n_features <= 8
        assert max(t.depth for t in model.trees) <= 3
        S = tree_shap(model, E[:4])
        for row, e in zip(S.values, E[:4]):
            worst = max(worst, float(np.abs(row - exact_tree_shap(model, e)).max()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 60
    record_criterion(1, ok, f"max |tree_shap - enumeration| = {worst:.2e}, {elapsed:.1f} s")
    assert ok


@pytest.mark.runs_last
def test_criterion_02_local_accuracy_everywhere():
    # rows produced here, plus every attribution matrix built earlier in the run
    for seed in range(10):
        model, E, _ = random_ensemble(100 + seed)
        tree_shap(model, E)
    rows = sum(n for n, _ in ATTRIBUTION_GAPS)
    worst = max(g for _, g in ATTRIBUTION_GAPS)
    ok = worst <= 1e-6
    record_criterion(2, ok, f"max local-accuracy gap {worst:.2e} over {rows} rows "
                            f"in {len(ATTRIBUTION_GAPS)} matrices")
    assert ok


def test_criterion_03_loo_matches_refits():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng([seed, 3])
        n = int(rng.integers(10, 101))
        x = np.sort(rng.uniform(size=n))
        y = np.sin(4 * x) + rng.normal(scale=0.3, size=n)
        curve = fit_spline_loocv(x, y)
        B = SplineBasis(curve.knot_count).evaluate(x)
        m = B.shape[1]
        for i in range(n):
            keep = np.arange(n) != i
            coef = np.linalg.solve(B[keep].T @ B[keep] + curve.ridge * np.eye(m),
                                   B[keep].T @ y[keep])
            worst = max(worst, abs(B[i] @ coef - curve.loo_predictions[i]))
    ok = worst <= 1e-8
    record_criterion(3, ok, f"max |LOO shortcut - refit| = {worst:.2e} on 20 datasets")
    assert ok


def test_criterion_04_mi_calibration():
    start = time.perf_counter()
    lines, ok = [], True
    for rho in (0.0, 0.5, 0.9):
        est = []
        for seed in range(20):
            rng = np.random.default_rng([seed, 4])
            x = rng.standard_normal(5000)
            y = rho * x + np.sqrt(1 - rho**2) * rng.standard_normal(5000)
            est.append(knn_mi(x, y, rng=keyed_rng(seed, 4)).value)
        truth = -0.5 * np.log(1 - rho**2)
        err = abs(np.mean(est) - truth)
        ok &= err <= 0.1
        lines.append(f"rho={rho}: {np.mean(est):.3f} vs {truth:.3f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    record_criterion(4, ok, "; ".join(lines) + f" ({elapsed:.1f} s)")
    assert ok


@pytest.mark.slow
def test_criterion_05_pair_direction_accuracy():
    start = time.perf_counter()
    rows = run_suite("pairs", 100, n=1000, seed=0)
    acc = {row.config.split()[0]: row.value for row in rows}
    assert len(acc) == len(PAIR_CELLS)
    gated = {cell_name(f, g): acc[cell_name(f, g)] for f, g in GATED_CELLS}
    elapsed = time.perf_counter() - start
    ok = min(gated.values()) >= 0.75 and elapsed < 20 * 60
    detail = ", ".join(f"{k} {v:.2f}" for k, v in acc.items())
    record_criterion(5, ok, f"{detail} (floor 0.75 on the five gated cells, {elapsed:.0f} s)")
    assert ok


@pytest.mark.slow
def test_criterion_06_rootcause_benchmark():
    start = time.perf_counter()
    rows = run_suite("rootcause", 50, p=10, n=2000, seed=0)
    means = {row.metric: row.value for row in rows if row.metric.startswith("mean_")}
    elapsed = time.perf_counter() - start
    rbo_ok = abs(means["mean_rbo"] - REFERENCE_RBO) <= 0.08
    mse_ok = abs(means["mean_mse"] - REFERENCE_MSE) <= 0.06
    ok = rbo_ok and mse_ok and elapsed < 60 * 60
    record_criterion(6, ok, f"mean RBO {means['mean_rbo']:.3f} (target {REFERENCE_RBO} +- 0.08), "
                            f"mean MSE {means['mean_mse']:.3f} (target {REFERENCE_MSE} +- 0.06), "
                            f"{elapsed:.0f} s")
    assert ok


def test_criterion_07_error_recovery():
    corr = []
    for seed in range(20):
        rng = keyed_rng(0, 0x4337, seed)
        dist = NON_GAUSSIAN[rng.integers(len(NON_GAUSSIAN))]
        f, g = rng.integers(3, size=2)
        x = rng.standard_normal(2000)
        x = (x - x.mean()) / x.std()
        e = sample_error(dist, 2000, rng)
        y = nonlinearity(f, x) + noise_scale(dist) * e * (1 + nonlinearity(g, x))
        res = extract_errors(np.column_stack([x, y]), Skeleton.complete(2), rng=seed)
        corr.append(abs(np.corrcoef(res.errors[:, 1], e)[0, 1]))
    ok = np.mean(corr) >= 0.85
    record_criterion(7, ok, f"mean |corr(E-hat, E)| of the effect = {np.mean(corr):.3f} "
                            f"(min {np.min(corr):.3f})")
    assert ok


def test_criterion_08_rbo_identities():
    checks = {
        "identical": rbo([RankedPatient([1, 0, 2], [1, 0, 2], [0.5, 0.3, 0.2])]).value == 1.0,
        "disjoint": rbo([RankedPatient([2, 3, 0, 1], [0, 1], [0.6, 0.4])]).value == 0.0,
        "swap 0.7/0.3": abs(rbo([RankedPatient([1, 0], [0, 1], [0.7, 0.3])]).value - 0.3) <= 1e-12,
        "swap uniform": abs(modified_rbo([RankedPatient.uniform([1, 0], [0, 1])]).value
                            - 0.5) <= 1e-12,
        "head match": rbo([RankedPatient([0, 1], [0, 1], [0.7, 0.3])]).value == 1.0,
    }
    ok = all(checks.values())
    record_criterion(8, ok, ", ".join(f"{k} {'ok' if v else 'WRONG'}" for k, v in checks.items()))
    assert ok


def _cli(args):
    return subprocess.run([sys.executable, "-m", "hnmroot.cli", *args],
                          capture_output=True, check=True).stdout


def test_criterion_09_cli_determinism(tmp_path):
    spec = sample_spec(6, rng=np.random.default_rng(9))
    data = generate(spec, 500, np.random.default_rng(10))
    sem = tmp_path / "sem.csv"
    sem.write_text("\n".join(
        [",".join(data.names + ["D"])]
        + [",".join([repr(float(v)) for v in x] + [str(d)]) for x, d in zip(data.X, data.d)]
    ) + "\n")
    pair = tmp_path / "pair.csv"
    pair.write_text("\n".join(
        ["a,b"] + [f"{u!r},{v!r}" for u, v in data.X[:, :2].tolist()]) + "\n")
    features = tmp_path / "features.csv"
    features.write_text("\n".join(
        [",".join(data.names)] + [",".join(repr(float(v)) for v in x) for x in data.X]) + "\n")
    commands = {
        "direction": ["direction", str(pair), "--seed", "4"],
        "extract-errors": ["extract-errors", str(features), "--seed", "4"],
        "root-causes": ["root-causes", str(sem), "--seed", "4", "--holdout", "0.2"],
        "benchmark": ["benchmark", "--suite", "rootcause", "--reps", "1", "--p", "5",
                      "--n", "400", "--seed", "4"],
    }
    same = {name: _cli(args) == _cli(args) for name, args in commands.items()}
    ok = all(same.values())
    record_criterion(9, ok, "byte-identical reruns: "
                            + ", ".join(f"{k} {'yes' if v else 'NO'}" for k, v in same.items()))
    assert ok


def test_criterion_10_scaling_exponent():
    spec = sample_spec(11, rng=np.random.default_rng(5))
    A = spec.dag | spec.dag.T
    cols = spec.feature_vars
    skel = Skeleton(A[np.ix_(cols, cols)])
    sizes = np.array([500, 1000, 2000])
    times = []
    for n in sizes:
        X = generate(spec, int(n), np.random.default_rng(n)).X
        best = np.inf
        for _ in range(3):
            start = time.perf_counter()
            extract_errors(X, skel, rng=0)
            best = min(best, time.perf_counter() - start)
        times.append(best)
    slope = np.polyfit(np.log(sizes), np.log(times), 1)[0]
    ok = slope <= 2.5
    record_criterion(10, ok, f"fitted exponent {slope:.2f} (times "
                             + ", ".join(f"{t * 1e3:.0f} ms" for t in times) + ", p = 10)")
    assert ok
