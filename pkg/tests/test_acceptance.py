"""Acceptance criteria 1-12, each reported as one PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` to see the summary lines. Every
Monte Carlo number comes from ``run_experiment`` on a config checked in
under ``quantseg/configs/acceptance``.
"""

from __future__ import annotations

import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import brute_force_qr, random_dataset, sign_condition_holds
from quantseg.adaptive import AdaptiveConfig, adaptive_penalty, fit_adaptive, kkt_verify
from quantseg.core import Dataset, FitResult, objective_value
from quantseg.experiment import load_config, run_experiment
from quantseg.metrics import excess_loss_sample, mean_and_se
from quantseg.segmentation import SegmentationConfig, best_segmentation
from quantseg.simulation import CAUCHY, E1, E3, NORMAL, d1, generate
from quantseg.solver import fit
from test_segmentation import enumerate_best


@pytest.fixture
def report(capsys):
    def _report(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return _report


@pytest.fixture(scope="module")
def sparsity_normal():
    return run_experiment(load_config("acceptance/sparsity_normal"))


@pytest.fixture(scope="module")
def robustness_cauchy():
    return run_experiment(load_config("acceptance/robustness_cauchy"))


@pytest.fixture(scope="module")
def localization_m3():
    return run_experiment(load_config("acceptance/localization_m3"))


@pytest.fixture(scope="module")
def k_selection():
    return run_experiment(load_config("acceptance/k_selection"))


def test_criterion_01_solver_exactness(report):
    rng = np.random.default_rng(101)
    fit(random_dataset(rng, 5, 1), 0.5)  # compile outside the timed loop
    worst, elapsed = 0.0, 0.0
    for _ in range(200):
        n, p = int(rng.integers(3, 9)), int(rng.integers(1, 3))
        data = random_dataset(rng, n, p, ties=bool(rng.random() < 0.2))
        tau = float(rng.uniform(0.05, 0.95))
        t0 = time.perf_counter()
        res = fit(data, tau)
        elapsed += time.perf_counter() - t0
        oracle = brute_force_qr(data, tau)
        worst = max(worst, abs(res.objective - oracle) / max(1.0, abs(oracle)))
    report(1, worst <= 1e-8 and elapsed < 10,
           f"max |LP - brute force| = {worst:.2e} (<= 1e-8), solver time {elapsed:.2f}s (< 10s)")


def test_criterion_02_residual_sign_counts(report):
    rng = np.random.default_rng(202)
    bad = total = 0
    for i in range(300):
        n, p = int(rng.integers(4, 80)), int(rng.integers(1, 6))
        data = random_dataset(rng, n, p, ties=i % 3 == 0)
        for tau in (0.1, 0.25, 0.5, 0.55, 0.9):
            res = fit(data, tau)
            total += 1
            bad += not sign_condition_holds(data, tau, res.intercept, res.coefficients)
    for law in (NORMAL, E1, CAUCHY):
        for r in range(10):
            data, _ = generate(d1(law), 202, r)
            for tau in (0.15, 0.5, 0.95):
                res = fit(data, tau)
                total += 1
                bad += not sign_condition_holds(data, tau, res.intercept, res.coefficients)
    report(2, bad == 0, f"N- <= tau*n <= N- + N0 violated in {bad} of {total} unpenalized fits "
                        "(the same check guards every unpenalized fit in the suite)")


def test_criterion_03_kkt_certification(report):
    rng = np.random.default_rng(303)
    cases = []
    for law in (NORMAL, E1, CAUCHY):
        for r in range(10):
            cases.append((generate(d1(law), 303, r)[0], float(rng.choice([0.15, 0.5, 0.55, 0.95]))))
    for _ in range(30):
        cases.append((random_dataset(rng, int(rng.integers(15, 80)), int(rng.integers(1, 6))),
                      float(rng.uniform(0.1, 0.9))))
    failed = undetected = perturbed = 0
    for data, tau in cases:
        for cfg in (AdaptiveConfig(), AdaptiveConfig(g=9 / 40)):
            res = fit_adaptive(data, tau, cfg)
            pen = adaptive_penalty(res)
            failed += not kkt_verify(data, tau, pen, res).all_satisfied
            for j in np.flatnonzero(res.coefficients):
                phi = res.coefficients.copy()
                phi[j] += 0.1
                moved = FitResult.build(data, res.intercept, phi,
                                        objective_value(data, res.intercept, phi, tau, pen))
                perturbed += 1
                undetected += kkt_verify(data, tau, pen, moved).all_satisfied
    report(3, failed == 0 and undetected == 0,
           f"{failed} of {2 * len(cases)} adaptive fits fail KKT; "
           f"{undetected} of {perturbed} +0.1 perturbations pass it")


def test_criterion_04_table1_sparsity(report, sparsity_normal):
    r = sparsity_normal.results["N(0,1)"]["0.5"]["QUANT+aLASSO g1"]
    report(4, r["true_zero"] >= 0.97 and r["false_zero"] <= 0.01,
           f"aQ g=1.225, N(0,1), tau=0.5, {r['replications']} reps: true-0 {r['true_zero']:.3f} "
           f"(>= 0.97), false-0 {r['false_zero']:.3f} (<= 0.01)")


def test_criterion_05_cauchy_robustness(report, robustness_cauchy):
    aq = robustness_cauchy.results["C(0,1)"]["0.5"]["QUANT+aLASSO g1"]
    ls = robustness_cauchy.results["C(0,1)"]["0.5"]["LS+aLASSO"]
    report(5, aq["true_zero"] >= 0.95 and aq["false_zero"] <= 0.02 and ls["true_zero"] <= 0.6,
           f"Cauchy, {aq['replications']} reps: aQ true-0 {aq['true_zero']:.3f} (>= 0.95), "
           f"false-0 {aq['false_zero']:.3f} (<= 0.02); LS true-0 {ls['true_zero']:.3f} (<= 0.6)")


def test_criterion_06_g_condition(report, sparsity_normal):
    res = sparsity_normal.results["N(0,1)"]["0.5"]
    g1, g2 = res["QUANT+aLASSO g1"]["true_zero"], res["QUANT+aLASSO g2"]["true_zero"]
    report(6, g1 - g2 >= 0.15,
           f"true-0 g=1.225 {g1:.3f} minus g=9/40 {g2:.3f} = {g1 - g2:.3f} (>= 0.15)")


def test_criterion_07_localization(report, localization_m3):
    e = localization_m3.results["E1,E1,E1"]["aQ"]
    l1, l2 = e["median_breaks"]
    report(7, 29 <= l1 <= 31 and 99 <= l2 <= 101,
           f"M3 Exp errors, {e['replications']} reps: median breaks ({l1}, {l2}), "
           "need [29,31] and [99,101]")


def test_criterion_08_dp_oracle(report):
    rng = np.random.default_rng(808)
    methods = ("aQ", "aQ", "Lt", "aLS")
    mismatches = 0
    for i in range(50):
        p = int(rng.integers(1, 3))
        n = int(rng.integers(16, 41))
        data = random_dataset(rng, n, p, ties=i % 5 == 0)
        cfg = SegmentationConfig(tau=float(rng.choice([0.3, 0.55, 0.8])), method=methods[i % 4])
        m = cfg.resolve_min_len(n, p)
        k = int(rng.integers(0, min(2, n // m - 1) + 1))
        seg = best_segmentation(data, k, cfg)
        total, cps = enumerate_best(data, k, cfg)
        mismatches += not (seg.change_points == cps and
                           abs(seg.total_objective - total) <= 1e-9 * max(1.0, total))
    report(8, mismatches == 0, f"DP differs from exhaustive enumeration on {mismatches} of 50 datasets")


def test_criterion_09_k_selection(report, k_selection):
    distinct = k_selection.results["phi1!=phi2 E1,N"]["aQ"]["k_hat_counts"]
    same = k_selection.results["phi1=phi2 E1,E3"]["aQ"]["k_hat_counts"]
    r1, r2 = distinct[1] / sum(distinct), same[1] / sum(same)
    report(9, r1 >= 0.9 and 0.4 <= r2 <= 0.8,
           f"K-hat=1 rate: distinct phi {r1:.2f} (>= 0.90), quantile-only change {r2:.2f} "
           f"(in [0.4, 0.8]); histograms {distinct} / {same}")


def test_criterion_10_post_segmentation_sparsity(report, localization_m3):
    segs = localization_m3.results["E1,E1,E1"]["aQ"]["segments"]
    gaps = [abs(s["estimated_breaks"][key] - s["true_breaks"][key])
            for s in segs for key in ("true_zero", "false_zero")]
    report(10, max(gaps) <= 0.05,
           f"largest per-segment rate gap, estimated vs true breaks: {max(gaps):.3f} (<= 0.05)")


def test_criterion_11_excess_loss_nonnegative(report):
    rng = np.random.default_rng(1111)
    laws = (NORMAL, E1, E3, CAUCHY)
    worst = np.inf
    for i in range(20):
        law, tau = laws[i % 4], float(rng.uniform(0.05, 0.95))
        b, phi_diff = float(rng.normal()), rng.normal(scale=0.5, size=10) * (rng.random(10) < 0.5)
        x = rng.normal(size=(100_000, 10))
        mean, se = mean_and_se(excess_loss_sample(law, tau, b, phi_diff, x, rng))
        worst = min(worst, mean / se)
    report(11, worst >= -3, f"smallest mean/SE of the excess loss over 20 draws of (b, phi): "
                            f"{worst:.2f} (>= -3)")


def test_criterion_12_determinism_across_jobs(report, tmp_path):
    same = []
    for args in (["--figure", "4", "--reps", "4"], ["--table", "1", "--reps", "4"]):
        outs = []
        for jobs in ("1", "2"):
            out = tmp_path / f"r{jobs}.json"
            subprocess.run([sys.executable, "-m", "quantseg.cli", "reproduce", *args, "--seed", "5",
                            "--jobs", jobs, "--out", str(out)], check=True, capture_output=True)
            outs.append(out.read_bytes())
        same.append(outs[0] == outs[1])
    report(12, all(same), f"reproduce reports byte-identical for --jobs 1 vs 2: {same}")
