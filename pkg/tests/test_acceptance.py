"""Acceptance gate: one test per criterion, each reporting PASS or FAIL.

Every test records its outcome through ``report_criterion`` (printed in the
terminal summary) and then asserts it, so a failing criterion stays red.
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from sudocs.amp import DenoiserKind, denoise_sparse_gaussian, denoise_true_prior
from sudocs.harness.config import Experiment, ExperimentConfig
from sudocs.harness.experiments import run_experiment
from sudocs.harness.pipeline import SudoAmpSetup, sudo_amp_trial
from sudocs.model import Family, noise_variance_for_snr
from sudocs.theory.analysis import Part1Params, p_eps_d_gaussian, p_eps_d_laplace
from sudocs.theory.se import build_prior_table, make_denoiser, state_evolution, summarize_part1

from oracles import dense_grid_posterior, small_measurement_mc, sparse_gaussian_quadrature

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

TESTS_DIR = Path(__file__).parent

# (n, s, d, eps, sigma_z2, x_j)
GAUSSIAN_TUPLES = [
    (100, 0.1, 2.0, 0.1, 0.01, 0.0),
    (100, 0.1, 2.0, 0.1, 0.01, 0.5),
    (500, 0.02, 1.0, 0.05, 0.001, 0.0),
    (1000, 0.01, 0.8, 0.05, 0.001, 0.3),
    (1000, 0.05, 3.0, 0.2, 0.01, -1.0),
    (200, 0.05, 0.5, 0.02, 0.0, 0.0),
]
# (n, s, d, eps, sigma_z2, x_j, laplace scale)
LAPLACE_TUPLES = [
    (100, 0.1, 2.0, 0.2, 0.01, 0.5, 1.0),
    (100, 0.1, 2.0, 0.2, 0.01, 0.0, 1.0),
    (300, 0.05, 1.0, 0.1, 0.001, -0.3, 1 / np.sqrt(2)),
]
MC_DRAWS = 10_000_000


def _run(experiment, **overrides):
    cfg = ExperimentConfig.from_dict(overrides, experiment.value)
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    return result, time.perf_counter() - t0


def _failed(checks, names):
    return [k for k in names if not checks[k]]


def _mc_agreement(tuples, exact_fn):
    worst = 0.0
    for tup in tuples:
        n, s, d, eps, sz2, xj = tup[:6]
        scale = tup[6] if len(tup) > 6 else None
        est, se = small_measurement_mc(n, s, d, eps, sz2, xj, MC_DRAWS, seed=n,
                                       laplace_scale=scale)
        worst = max(worst, abs(float(exact_fn(tup)) - est) / se)
    return worst


def test_criterion_01_gaussian_small_measurement_probability(report_criterion):
    def exact(t):
        n, s, d, eps, sz2, xj = t
        return p_eps_d_gaussian(xj, Part1Params(n, 10, s, d, eps, 1, sz2))

    t0 = time.perf_counter()
    worst = _mc_agreement(GAUSSIAN_TUPLES, exact)
    elapsed = time.perf_counter() - t0
    ok = report_criterion(1, worst <= 3.0 and elapsed < 120,
                          f"worst deviation {worst:.2f} SE over {len(GAUSSIAN_TUPLES)} tuples, "
                          f"{elapsed:.0f} s")
    assert ok


def test_criterion_02_laplace_small_measurement_probability(report_criterion):
    def exact(t):
        n, s, d, eps, sz2, xj, b = t
        p = Part1Params(n, 10, s, d, eps, 1, sz2, Family.SPARSE_LAPLACE, b)
        return p_eps_d_laplace(xj, p)

    t0 = time.perf_counter()
    worst = _mc_agreement(LAPLACE_TUPLES, exact)
    elapsed = time.perf_counter() - t0
    ok = report_criterion(2, worst <= 3.0 and elapsed < 180,
                          f"worst deviation {worst:.2f} SE over {len(LAPLACE_TUPLES)} tuples, "
                          f"{elapsed:.0f} s")
    assert ok


def test_criterion_03_independence_convergence(report_criterion):
    result, elapsed = _run(Experiment.VERIFY_INDEPENDENCE)
    rows = result.tables["independence"]
    bad = _failed(result.checks, result.checks)
    detail = ("err_md " + " ".join(f"{r['err_md']:.4f}" for r in rows)
              + " | err_fa " + " ".join(f"{r['err_fa']:.4f}" for r in rows)
              + f" | {rows[0]['trials']} seeds, {elapsed:.0f} s"
              + (f" | failed: {', '.join(bad)}" if bad else ""))
    ok = report_criterion(3, not bad and rows[0]["trials"] >= 200 and elapsed < 600, detail)
    assert ok


def test_criterion_04_false_alarm_noise_gaussian(report_criterion):
    result, elapsed = _run(Experiment.VERIFY_GAUSSIANITY)
    row = result.tables["gaussianity"][0]
    bad = _failed(result.checks, result.checks)
    detail = (f"KS p {row['ks_pvalue']:.3f}, corr {row['corr_stat']:.4f} vs iid "
              f"{row['corr_stat_iid']:.4f}, variance error {row['var_rel_err']:.3f}, "
              f"{elapsed:.0f} s")
    ok = report_criterion(4, not bad and row["N"] == 5000 and elapsed < 300, detail)
    assert ok


def test_criterion_05_amp_tracks_state_evolution(report_criterion):
    s, n, t_max, seeds = 0.01, 20000, 20, 20
    sz2 = noise_variance_for_snr(s, 10.0)
    setup = SudoAmpSetup(n, s, sz2, m1=2000, m2=3000, d=0.4, eps=0.05, c=2, t_max=t_max)
    p = setup.part1_params()
    summary = summarize_part1(p)
    den = make_denoiser(DenoiserKind.SPARSE_GAUSSIAN, p, summary)
    se = state_evolution(p, setup.m2, den, t_max, summary)
    t0 = time.perf_counter()
    traces = [sudo_amp_trial(setup, seed, {"sg": den}, trace=True)["trace_sg"]
              for seed in range(seeds)]
    elapsed = time.perf_counter() - t0
    hat = np.array([[row["sigma2_hat"] for row in tr[:t_max + 1]] for tr in traces]).mean(axis=0)
    rel = np.abs(hat - se.sigma2[:hat.size]) / se.sigma2[:hat.size]
    worst = float(rel[2:].max())
    ok = report_criterion(5, worst < 0.10 and hat.size == t_max + 1
                          and 4500 <= summary.n_tilde <= 5500 and elapsed < 300,
                          f"n_tilde {summary.n_tilde:.0f}, worst relative error {worst:.4f} "
                          f"for t >= 2, {elapsed:.0f} s")
    assert ok


def test_criterion_06_denoisers_match_oracles(report_criterion):
    v_grid = np.linspace(-6.0, 6.0, 25)
    sigma2_grid = (0.01, 0.1, 1.0)
    h = 1e-5
    t0 = time.perf_counter()
    err_val, err_der = 0.0, 0.0
    for sigma2 in sigma2_grid:
        val, der = denoise_sparse_gaussian(v_grid, sigma2, 0.05)
        oracle = np.array([sparse_gaussian_quadrature(v, sigma2, 0.05) for v in v_grid])
        fd = (denoise_sparse_gaussian(v_grid + h, sigma2, 0.05)[0]
              - denoise_sparse_gaussian(v_grid - h, sigma2, 0.05)[0]) / (2 * h)
        err_val = max(err_val, float(np.max(np.abs(val - oracle))))
        err_der = max(err_der, float(np.max(np.abs(der - fd))))
    s = 0.01
    p = Part1Params(20000, 2000, s, 0.4, 0.05, 2, noise_variance_for_snr(s, 10.0))
    spec = make_denoiser(DenoiserKind.TRUE_PRIOR, p, table=build_prior_table(p))
    for sigma2 in sigma2_grid:
        val, der = denoise_true_prior(v_grid, sigma2, spec)
        oracle = np.array([dense_grid_posterior(v, sigma2, p)[0] for v in v_grid])
        fd = (denoise_true_prior(v_grid + h, sigma2, spec)[0]
              - denoise_true_prior(v_grid - h, sigma2, spec)[0]) / (2 * h)
        err_val = max(err_val, float(np.max(np.abs(val - oracle))))
        err_der = max(err_der, float(np.max(np.abs(der - fd))))
    elapsed = time.perf_counter() - t0
    ok = report_criterion(6, err_val <= 1e-5 and err_der <= 1e-4 and elapsed < 60,
                          f"value error {err_val:.1e}, derivative error {err_der:.1e}, "
                          f"{elapsed:.0f} s")
    assert ok


def test_criterion_07_prior_approximation_gap(report_criterion):
    result, elapsed = _run(Experiment.PRIOR_APPROX)
    rows = result.tables["prior_approx"]
    worst = max(r["gap_db"] for r in rows)
    ok = report_criterion(7, result.checks["gap_below_0.5db"] and len(rows) == 6
                          and rows[0]["trials"] == 20 and elapsed < 900,
                          f"largest gap {worst:.3f} dB over {len(rows)} rates, {elapsed:.0f} s")
    assert ok


def test_criterion_08_tradeoff_predictions(report_criterion):
    result, elapsed = _run(Experiment.VERIFY_TRADEOFF)
    rows = result.tables["verify_tradeoff"]
    model = result.info["runtime_model"]
    bad = _failed(result.checks, result.checks)
    detail = (f"{len(rows)} points, worst SDR error {max(r['sdr_abs_err'] for r in rows):.2f} dB, "
              f"worst runtime error {max(r['runtime_rel_err'] for r in rows):.2f}, "
              f"R2 {model['r2_part1']:.3f}/{model['r2_part2']:.3f}, {elapsed:.0f} s"
              + (f" | failed: {', '.join(bad)}" if bad else ""))
    ok = report_criterion(8, not bad and elapsed < 1200, detail)
    assert ok


def _onebit_detail(rows):
    return ", ".join(f"{r['method']}@{r['iters']} R={r['R']}: {r['sdr_db']:.2f} dB"
                     + (f" {r['runtime_s'] * 1e3:.1f} ms" if np.isfinite(r["runtime_s"]) else "")
                     for r in rows)


def test_criterion_09_noiseless_onebit(report_criterion):
    result, elapsed = _run(Experiment.ONEBIT_NOISELESS)
    bad = _failed(result.checks, result.checks)
    detail = (_onebit_detail(result.tables["onebit"]) + f" | {elapsed:.0f} s"
              + (f" | failed: {', '.join(bad)}" if bad else ""))
    ok = report_criterion(9, not bad and elapsed < 900, detail)
    assert ok


def test_criterion_10_noisy_onebit(report_criterion):
    result, elapsed = _run(Experiment.ONEBIT_NOISY)
    rows = result.tables["onebit"]
    sudo = next(r for r in rows if r["method"] == "sudo-biht" and r["iters"] == 130)
    base = next(r for r in rows if r["method"] == "biht" and r["iters"] == 30)
    gain = sudo["sdr_db"] - base["sdr_db"]
    ok = report_criterion(10, result.checks["sudo_beats_biht_by_3db"] and elapsed < 600,
                          f"gain {gain:.2f} dB at R = 1.0 over {sudo['trials']} seeds, "
                          f"{elapsed:.0f} s")
    assert ok


def test_criterion_11_structural_property_suite(report_criterion):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(TESTS_DIR / "test_properties.py")],
                          capture_output=True, text=True, cwd=TESTS_DIR.parent)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = report_criterion(11, proc.returncode == 0 and elapsed < 60, f"{tail}, {elapsed:.0f} s")
    assert ok, proc.stdout[-2000:]
