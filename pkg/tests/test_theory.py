import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from oracles import small_measurement_mc
from sudocs.amp import DenoiserKind, DenoiserSpec
from sudocs.errors import FitDegenerateError, InvalidDensityError
from sudocs.measure import NoiseModel, gen_phi1, measure_linear
from sudocs.model import Family, SignalModel, noise_variance_for_snr, sample_signal
from sudocs.part1 import identify_zeros, small_measurement_set
from sudocs.theory.analysis import (Part1Params, contributor_weights, fa_noise_power, p_eps_d,
                                    p_eps_d_gaussian, p_eps_d_laplace, p_fa, p_fa_at, p_md,
                                    part2_dims, prior_x_T)
from sudocs.theory.se import (build_prior_table, joint_cf_finite, joint_cf_limit, predict_sdr,
                              sdr_from_mse, state_evolution, summarize_part1, theory_report)
from sudocs.theory.tradeoff import (RuntimeModel, envelope, fit_runtime_model,
                                    split_measurements, sweep_tradeoff)

# Part-1 operating point of the prior-approximation experiment, at N = 20000
FIG3 = Part1Params(20000, 2000, 0.01, 0.4, 0.05, 2, noise_variance_for_snr(0.01, 10.0))


def test_params_validation():
    with pytest.raises(InvalidDensityError):
        Part1Params(100, 10, 0.01, 2.0, 0.1, 1)
    with pytest.raises(ValueError):
        Part1Params(100, 10, 0.1, 1.0, -0.1, 1)
    assert FIG3.replace(c=3).c == 3 and FIG3.gamma2 == pytest.approx(0.025)


def test_zero_width_interval():
    p = Part1Params(100, 10, 0.1, 2.0, 0.0, 1, 0.01)
    np.testing.assert_array_equal(p_eps_d_gaussian(np.array([0.0, 0.7]), p), [0.0, 0.0])
    lp = p.replace(family=Family.SPARSE_LAPLACE)
    assert float(p_eps_d_laplace(0.3, lp)) == 0.0


def test_rarely_measured_coefficient():
    p = Part1Params(1000, 10, 0.1, 1e-9, 0.5, 1, 0.01)
    assert float(p_eps_d_gaussian(0.0, p)) < 1e-10


def test_noise_free_point_mass():
    # no noise: only rows without other nonzero contributors are small at x_j = 0
    p = Part1Params(200, 10, 0.05, 0.5, 0.02, 1, 0.0)
    q = p.row_density * (1 - 0.5 / 200) ** 199
    assert float(p_eps_d_gaussian(0.0, p)) == pytest.approx(q + p.row_density * (
        stats.binom(199, 0.5 / 200).pmf(np.arange(1, 40))
        * (2 * stats.norm.cdf(0.02 / np.sqrt(np.arange(1, 40) * p.gamma2)) - 1)).sum(), rel=1e-10)


@pytest.mark.parametrize("xj", [0.0, 0.5])
def test_gaussian_joint_event_against_simulation(xj):
    p = Part1Params(100, 10, 0.1, 2.0, 0.1, 1, 0.01)
    mc, se = small_measurement_mc(100, 0.1, 2.0, 0.1, 0.01, xj, 10**6, seed=1)
    assert abs(float(p_eps_d_gaussian(xj, p)) - mc) < 3 * se


def test_laplace_joint_event_against_simulation():
    p = Part1Params(100, 10, 0.1, 2.0, 0.2, 1, 0.01, Family.SPARSE_LAPLACE)
    mc, se = small_measurement_mc(100, 0.1, 2.0, 0.2, 0.01, 0.5, 10**6, seed=2, laplace_scale=1.0)
    assert abs(float(p_eps_d_laplace(0.5, p)) - mc) < 3 * se


def test_laplace_noise_free_case():
    p = Part1Params(100, 10, 0.1, 2.0, 0.2, 1, 0.0, Family.SPARSE_LAPLACE)
    mc, se = small_measurement_mc(100, 0.1, 2.0, 0.2, 0.0, 0.0, 10**6, seed=3, laplace_scale=1.0)
    assert abs(float(p_eps_d(0.0, p)) - mc) < 3 * se


def test_evenness():
    x = np.array([0.1, 0.7, 2.5])
    np.testing.assert_allclose(p_eps_d_gaussian(x, FIG3), p_eps_d_gaussian(-x, FIG3), rtol=1e-13)
    lp = Part1Params(200, 20, 0.05, 1.0, 0.1, 1, 0.01, Family.SPARSE_LAPLACE)
    np.testing.assert_allclose(p_eps_d_laplace(x, lp), p_eps_d_laplace(-x, lp), rtol=1e-9)


def test_poisson_switch_matches_exact_sum():
    p = Part1Params(10**5, 100, 0.01, 1.0, 0.05, 2, 0.001)
    x = np.array([0.0, 0.3, 1.0, 3.0])
    np.testing.assert_allclose(p_eps_d_gaussian(x, p, exact=True),
                               p_eps_d_gaussian(x, p, exact=False), atol=1e-8)
    k, w = contributor_weights(p.replace(n=10**6))
    assert w.sum() == pytest.approx(1.0, abs=1e-12) and k[0] == 0


def test_p_md_single_term_and_exhaustive():
    p = FIG3.replace(c=1)
    q = float(p_eps_d(0.0, p))
    assert p_md(p) == pytest.approx((1 - q) ** p.m1, rel=1e-10)
    assert p_md(FIG3.replace(m1=3, c=4)) == 1.0
    np.testing.assert_array_equal(p_fa_at(np.array([0.0, 1.0]), FIG3.replace(m1=3, c=4)), [0, 0])


def test_p_md_monotone():
    cs = [p_md(FIG3.replace(c=c)) for c in range(1, 6)]
    assert all(b >= a for a, b in zip(cs, cs[1:]))
    es = [p_md(FIG3.replace(eps=e)) for e in (0.01, 0.02, 0.05, 0.1)]
    assert all(b <= a for a, b in zip(es, es[1:]))


def test_p_fa_monotone_in_eps_and_stable():
    fas = [p_fa(FIG3.replace(eps=e)) for e in (0.0, 0.01, 0.05, 0.1, 0.2)]
    assert fas[0] == 0.0 and all(b >= a for a, b in zip(fas, fas[1:]))
    assert abs(p_fa(FIG3, 1e-10) - p_fa(FIG3, 5e-11)) < 1e-8
    assert 0.0 <= p_fa(FIG3) <= 1.0


def test_part2_dims_limits():
    assert part2_dims(FIG3, md=1.0, fa=0.0) == (FIG3.n, FIG3.s)
    n_t, s_t = part2_dims(FIG3, md=0.0, fa=0.0)
    assert n_t == pytest.approx(FIG3.s * FIG3.n) and s_t == pytest.approx(1.0)
    n_t, s_t = part2_dims(FIG3, md=0.0, fa=1.0)
    assert n_t == 0.0 and math.isnan(s_t)


def _simulate_part1(p, seeds):
    """Per-seed survivor fraction, survivor sparsity and false-alarm energy."""
    frac, sparsity, energy = [], [], []
    for seed in seeds:
        x = sample_signal(SignalModel(s=p.s), p.n, seed).values
        phi = gen_phi1(p.m1, p.n, p.s, p.d, seed=seed)
        y = measure_linear(phi, x, NoiseModel(p.sigma_z2), seed, "z1")
        res = identify_zeros(phi, small_measurement_set(y, p.eps), p.c, x)
        frac.append(res.T.size / p.n)
        sparsity.append(np.count_nonzero(x[res.T]) / res.T.size)
        energy.append(np.sum(x[res.fa_set] ** 2))
    return np.mean(frac), np.mean(sparsity), np.mean(energy)


@pytest.fixture(scope="module")
def fig3_simulation():
    return _simulate_part1(FIG3, range(100))


def test_part2_dims_against_simulation(fig3_simulation):
    frac, sparsity, _ = fig3_simulation
    n_t, s_t = part2_dims(FIG3)
    assert abs(n_t / FIG3.n - frac) < 0.02 * frac
    assert abs(s_t - sparsity) < 0.02 * sparsity


def test_fa_noise_power(fig3_simulation):
    assert fa_noise_power(FIG3.replace(eps=0.0)) == (0.0, 0.0)
    full = Part1Params(100, 50, 0.1, 10.0, 1e6, 1, 0.01)
    assert np.all(p_fa_at(np.array([0.0, 3.0]), full) == 1.0)
    energy, sig2 = fa_noise_power(full)
    assert energy == pytest.approx(full.s * full.n, rel=1e-9) and sig2 == energy / full.n
    energy, _ = fa_noise_power(FIG3)
    assert abs(energy - fig3_simulation[2]) < 0.05 * energy


@pytest.mark.parametrize("p", [FIG3, FIG3.replace(eps=0.2, c=1), FIG3.replace(d=3.0, m1=500),
                               Part1Params(2000, 200, 0.05, 1.0, 0.1, 2, 0.01, Family.SPARSE_LAPLACE)])
def test_survivor_prior_normalized(p):
    md, fa = p_md(p), p_fa(p)
    w0, _ = prior_x_T(0.0, p, md, fa)
    if p.family is Family.SPARSE_LAPLACE:
        # per-point Fourier inversion is slow; Simpson on an even grid suffices
        a = np.linspace(0.0, 20.0, 201)
        mass = 2 * integrate.simpson(prior_x_T(a, p, md, fa)[1], x=a)
    else:
        mass = integrate.quad(lambda a: float(prior_x_T(a, p, md, fa)[1]), -8.0, 8.0,
                              points=[0.0], limit=400, epsabs=1e-10)[0]
    assert w0 + mass == pytest.approx(1.0, abs=1e-6)


def test_survivor_prior_without_false_alarms_is_gaussian():
    p = FIG3.replace(eps=0.0)
    a = np.linspace(-3, 3, 7)
    _, dens = prior_x_T(a, p)
    ratio = dens / stats.norm.pdf(a)
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


def test_se_wiener_recursion_closed_form():
    # Part 1 disabled: survivors follow the input prior, whose second moment is s
    p = Part1Params(5000, 0, 0.05, 1.0, 0.0, 1, 0.002)
    m2 = 2000
    se = state_evolution(p, m2, DenoiserSpec(DenoiserKind.SPARSE_GAUSSIAN, 1.0), t_max=10)
    sig = [p.n / m2 * p.sigma_z2 + p.n / m2 * p.s]
    for _ in range(10):
        s2 = sig[-1]
        mse = (s2 * s2 * p.s + s2) / (1 + s2) ** 2
        sig.append(p.n / m2 * p.sigma_z2 + p.n / m2 * mse)
    np.testing.assert_allclose(se.sigma2, sig, rtol=1e-6)


def test_se_flags_growth():
    p = Part1Params(5000, 0, 0.5, 1.0, 0.0, 1, 1e7)
    assert state_evolution(p, 10, t_max=5).flagged


def test_se_nothing_survives():
    p = Part1Params(100, 50, 0.1, 10.0, 1e6, 1, 0.01)
    se = state_evolution(p, 20, t_max=4)
    np.testing.assert_allclose(se.sigma2, p.n / 20 * (fa_noise_power(p)[1] + 0.01))
    assert se.final_mse == 0.0


def test_predict_sdr_sentinel_and_part1_off():
    assert sdr_from_mse(1.0, 0.0) == math.inf
    assert sdr_from_mse(10.0, 1.0) == pytest.approx(10.0)
    off = Part1Params(5000, 0, 0.05, 1.0, 0.0, 1, 0.002)
    se = state_evolution(off, 2000)
    n_t, _ = part2_dims(off)
    assert n_t == off.n
    assert predict_sdr(off, 2000) == pytest.approx(10 * np.log10(off.s * off.n / (off.n * se.final_mse)))


def test_theory_report_json():
    rm = RuntimeModel(np.array([1e-9, 0, 1e-10]), np.array([0, 0, 1e-9]))
    rep = theory_report(FIG3, 3000, runtime_model=rm)
    d = json.loads(rep.to_json())
    assert d["params"]["n"] == FIG3.n and d["params"]["family"] == "sparse_gaussian"
    assert d["m2"] == 3000 and len(d["se_trajectory"]) == 21
    assert 0 <= d["p_md"] <= 1 and 0 <= d["n_tilde"] <= FIG3.n
    assert d["t1_pred"] == pytest.approx(rm.t1(FIG3.n, FIG3.m1))


def test_runtime_fit_recovers_coefficients():
    alpha, beta = np.array([2e-9, 3e-7, 4e-10]), np.array([1e-8, 5e-8, 2e-9])
    p1 = [(n, m, alpha @ [n, m, n * m]) for n in (1e3, 2e3, 4e3, 8e3) for m in (50, 100, 200, 400)]
    p2 = [(n, m, beta @ [n, m, n * m]) for n in (100, 300, 900) for m in (200, 500, 1000)]
    rm = fit_runtime_model(p1, p2)
    np.testing.assert_allclose(rm.alpha, alpha, rtol=1e-8)
    np.testing.assert_allclose(rm.beta, beta, rtol=1e-8)
    assert rm.r2_part1 == pytest.approx(1.0) and rm.r2_part2 == pytest.approx(1.0)
    back = RuntimeModel.from_dict(json.loads(json.dumps(rm.to_dict())))
    assert back.predict(1e3, 50, 100, 200) == pytest.approx(rm.predict(1e3, 50, 100, 200))


def test_runtime_fit_degenerate():
    rows = [(1000, 100, 1.0)] * 6
    with pytest.raises(FitDegenerateError):
        fit_runtime_model(rows, rows)
    # m proportional to n makes the three columns collinear
    line = [(n, 2 * n, 1.0) for n in (1, 2, 3, 4, 5)]
    with pytest.raises(FitDegenerateError):
        fit_runtime_model(line, line)


def test_split_measurements():
    assert split_measurements(10000, 0.5, 0.25) == (1000, 4000)
    assert sum(split_measurements(777, 0.33, 0.1)) == round(0.33 * 777)


RM = RuntimeModel(np.array([1e-8, 1e-6, 1e-9]), np.array([1e-7, 1e-7, 1e-9]))


def test_single_tuple_sweep():
    grid = {"d": [0.4], "eps": [0.05], "c": [2], "r": [0.1]}
    fr = sweep_tradeoff(5000, 0.01, 0.001, grid, [0.4], RM, bins=30)
    rows = fr.for_rate(0.4)
    assert len(rows) == 30 and len(fr.points) == 1
    filled = [r for r in rows if not math.isnan(r["best_sdr"])]
    assert len(filled) == 1 and filled[0]["best_sdr"] == fr.points[0].sdr
    assert (filled[0]["d"], filled[0]["eps"], filled[0]["c"], filled[0]["r"]) == (0.4, 0.05, 2, 0.1)


def test_sweep_envelope_monotone():
    grid = {"d": [0.4, 1.5], "eps": [0.02, 0.1], "c": [1, 2], "r": [0.05, 0.2]}
    fr = sweep_tradeoff(5000, 0.01, 0.001, grid, [0.3, 0.6], RM, bins=10)
    for R in (0.3, 0.6):
        env = [r["envelope_sdr"] for r in fr.for_rate(R)]
        finite = [e for e in env if not math.isnan(e)]
        assert all(b >= a for a, b in zip(finite, finite[1:]))
        assert max(r["best_sdr"] for r in fr.for_rate(R) if not math.isnan(r["best_sdr"])) == finite[-1]
    np.testing.assert_array_equal(envelope([math.nan, 1.0, math.nan, 0.5, 2.0]),
                                  [math.nan, 1.0, 1.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        sweep_tradeoff(5000, 0.01, 0.001, dict(grid, c=[]), [0.3], RM)


def test_joint_cf_converges_to_product_form():
    t1, t2 = np.meshgrid(np.linspace(-2, 2, 9), np.linspace(-2, 2, 9))
    errs = [np.max(np.abs(joint_cf_finite(t1, t2, n, 0.05, 1.0) - joint_cf_limit(t1, t2, 1.0)))
            for n in (100, 1000, 10000, 100000)]
    assert all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] < 1e-4
    lim = joint_cf_limit(t1, t2, 1.0)
    np.testing.assert_allclose(lim, joint_cf_limit(t1, 0, 1.0) * joint_cf_limit(0, t2, 1.0))


def test_joint_cf_matches_simulated_pairs():
    from sudocs._rng import make_rng
    n, s, d, trials = 200, 0.05, 1.0, 200_000
    rng = make_rng(0, "cf")
    q = d / (s * n)
    pts = [(0.5, -1.0), (1.0, 1.0), (2.0, 0.3)]
    acc = np.zeros(len(pts), dtype=complex)
    for _ in range(trials // 10_000):
        x = np.where(rng.random((10_000, n)) < s, rng.standard_normal((10_000, n)), 0.0)
        b1 = rng.random((10_000, n)) < q
        b2 = rng.random((10_000, n)) < q
        y1, y2 = (x * b1).sum(1), (x * b2).sum(1)
        for i, (u, v) in enumerate(pts):
            acc[i] += np.exp(1j * (u * y1 + v * y2)).sum()
    emp = acc / trials
    for (u, v), e in zip(pts, emp):
        assert abs(e - joint_cf_finite(u, v, n, s, d)) < 4 / np.sqrt(trials)


@pytest.mark.slow
def test_hit_count_law_approaches_binomial():
    s, d, eps, c, ratio = 0.01, 0.5, 0.01, 4, 0.3
    sz2 = noise_variance_for_snr(s, 30.0)
    tv = []
    for n in (256, 1024, 4096, 16384):
        m1 = round(ratio * n)
        p = Part1Params(n, m1, s, d, eps, c, sz2)
        q = float(p_eps_d(0.0, p))
        counts = np.zeros(m1 + 1)
        for seed in range(200):
            x = sample_signal(SignalModel(s=s), n, seed).values
            phi = gen_phi1(m1, n, s, d, seed=seed)
            y = measure_linear(phi, x, NoiseModel(sz2), seed, "z1")
            S = identify_zeros(phi, small_measurement_set(y, eps), c).hit_counts[x == 0]
            counts += np.bincount(S, minlength=m1 + 1)[:m1 + 1]
        emp = counts / counts.sum()
        tv.append(0.5 * np.abs(emp - stats.binom(m1, q).pmf(np.arange(m1 + 1))).sum())
    assert all(b < a for a, b in zip(tv, tv[1:])), tv
