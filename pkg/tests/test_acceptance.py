"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (visible with ``-s`` or in the
``-v`` log) and then asserts the same verdict.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from lpis.analytic_bounds import (
    conditional_pep_l1,
    conditional_pep_l2,
    pep_laplace,
    pep_quadrature,
    sphere_bound_awln,
    union_bound_awln,
)
from lpis.analytic_gains import GainQuery, asym_is_gain_general, asym_is_gain_l1, asym_is_gain_l2
from lpis.codes import bundled_code, weight_distribution
from lpis.estimator_engine import IsConfig, init_histogram, is_estimate, make_decoder, mc_estimate
from lpis.ggd_channel import GgdParams, SnrPoint, ggd_sample, radius_pdf
from lpis.numerics import adaptive_quadrature, q_function
from lpis.rng import make_rng

from oracles import conditional_pep_l1_reference, conditioned_mc, laplace_pep_mp

# weight distributions as published for the two primitive BCH codes
PUBLISHED = {
    "bch_15_7": {5: 18, 6: 30, 7: 15, 8: 15, 9: 30, 10: 18, 15: 1},
    "bch_31_11": {11: 186, 12: 310, 15: 527, 16: 527, 19: 310, 20: 186, 31: 1},
}


def verdict(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}")
    assert ok, detail


def sigma_at(code, db):
    return SnrPoint(db, code.rate).sigma


def test_criterion_01_weight_tables(capsys):
    t0 = time.perf_counter()
    got = {name: weight_distribution(bundled_code(name, validate=False)) for name in PUBLISHED}
    elapsed = time.perf_counter() - t0
    ok = got == PUBLISHED and elapsed < 1.0
    verdict(capsys, 1, "weight-table oracle", ok,
            f"enumerated tables {'match' if got == PUBLISHED else 'differ'}, {elapsed:.3f} s")


def test_criterion_02_radius_law(capsys):
    t0 = time.perf_counter()
    rng = make_rng(2024)
    samples = 10 ** 6
    # asymptotic Kolmogorov critical value at the 0.1% level
    crit = math.sqrt(-0.5 * math.log(0.001 / 2)) / math.sqrt(samples)
    worst = 0.0
    for n, p, sigma in ((15, 1.0, 1.0), (31, 2.0, 0.7), (15, 1.6, 1.0), (15, 2.8, 1.0)):
        params = GgdParams(p, sigma, n)
        s = np.empty(samples)
        for lo in range(0, samples, 200_000):
            z = ggd_sample(params, rng, size=(min(200_000, samples - lo), n))
            s[lo:lo + z.shape[0]] = np.sum(np.abs(z) ** p, axis=1)
        stat = stats.kstest(s, stats.gamma(n / p, scale=params.alpha ** p).cdf).statistic
        worst = max(worst, stat / crit)
    elapsed = time.perf_counter() - t0
    ok = worst < 1.0 and elapsed < 30
    verdict(capsys, 2, "radius law", ok, f"max KS/critical {worst:.3f} over 4 cases, {elapsed:.1f} s")


def test_criterion_03_conditional_pep_oracle(capsys):
    t0 = time.perf_counter()
    rng = make_rng(33)
    n, d, samples = 15, 5, 10 ** 7
    worst = 0.0
    cases = [(1.0, r, conditional_pep_l1(n, d, r)) for r in np.linspace(d, 4 * d, 10)]
    cases += [(2.0, r, conditional_pep_l2(n, d, r))
              for r in np.linspace(math.sqrt(d), 4 * math.sqrt(d), 10)]
    for p, r, exact in cases:
        est, _ = conditioned_mc(n, d, r, p, samples, rng)
        se = math.sqrt(max(exact * (1 - exact), 1.0 / samples) / samples)
        worst = max(worst, abs(est - exact) / se)
    elapsed = time.perf_counter() - t0
    ok = worst <= 3.0 and elapsed < 300
    verdict(capsys, 3, "conditional-PEP oracle", ok,
            f"max |MC - exact| = {worst:.2f} SE over 20 radii at 1e7 samples, {elapsed:.0f} s")


def test_criterion_04_total_probability(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n, d, sigma in ((7, 3, 1.0), (15, 5, 0.8)):
        params = GgdParams(1.0, sigma, n)

        def integrand(r):
            return np.array([conditional_pep_l1(n, d, x) for x in np.atleast_1d(r)]) * radius_pdf(r, params)

        total = adaptive_quadrature(integrand, d, math.inf, rel_tol=1e-11,
                                    breakpoints=list(range(d + 1, 2 * n + 2 * d)))
        # the pairwise PEP from an independent mpmath enumeration
        worst = max(worst, abs(total - laplace_pep_mp(d, sigma)) / laplace_pep_mp(d, sigma))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 60
    verdict(capsys, 4, "total-probability identity", ok, f"max relative gap {worst:.1e}, {elapsed:.1f} s")


def test_criterion_05_quadrature_pep(capsys):
    t0 = time.perf_counter()
    worst2 = worst1 = 0.0
    for d in (3, 5, 9):
        for sigma in (0.5, 1.0):
            worst2 = max(worst2, abs(pep_quadrature(d, 2.0, sigma) - q_function(math.sqrt(d) / sigma)))
            worst1 = max(worst1, abs(pep_quadrature(d, 1.0, sigma) - pep_laplace(d, sigma)))
    elapsed = time.perf_counter() - t0
    ok = worst2 < 1e-6 and worst1 < 1e-6 and elapsed < 60
    verdict(capsys, 5, "quadrature PEP", ok,
            f"max abs error p=2 {worst2:.1e}, p=1 {worst1:.1e}, {elapsed:.1f} s")


BOUND_GRID = np.arange(-6.0, 8.01, 1.0)
SIM_GRID = {"bch_15_7": np.arange(0.0, 8.01, 1.0), "bch_31_11": np.arange(0.0, 7.01, 1.0)}


def _sweep(code, grid, p=1.0, seed=0):
    """kappa = 0.1 IS estimates along an ascending grid, warm-starting each point."""
    dec = make_decoder(code)
    hist, out = None, []
    for i, db in enumerate(grid):
        est, hist = is_estimate(code, dec, GgdParams(p, sigma_at(code, db)), IsConfig(seed=seed + i), hist)
        out.append(est)
    return out


@pytest.mark.slow
def test_criterion_06_bound_ordering(capsys):
    t0 = time.perf_counter()
    notes, ok = [], True
    for name in ("bch_15_7", "bch_31_11"):
        code = bundled_code(name)
        union = np.array([union_bound_awln(code, sigma_at(code, db)) for db in BOUND_GRID])
        sphere = np.array([sphere_bound_awln(code, sigma_at(code, db)) for db in BOUND_GRID])
        below = bool(np.all(sphere <= np.minimum(1.0, union) * (1 + 1e-9)))
        exceeds = bool(union[0] > 1.0)
        sims = _sweep(code, SIM_GRID[name])
        sb = np.array([sphere[np.isclose(BOUND_GRID, db)][0] for db in SIM_GRID[name]])
        wer = np.array([e.wer for e in sims])
        kap = np.array([e.relative_error for e in sims])
        covers = bool(np.all(sb >= wer * (1 - 3 * kap)))
        ratio = sb / wer
        # non-increasing up to the sampling noise of two neighbouring estimates
        slack = 3 * np.sqrt(kap[1:] ** 2 + kap[:-1] ** 2)
        decreasing = bool(np.all(ratio[1:] <= ratio[:-1] * (1 + slack)))
        # flattening: the last three ratios agree within that same noise
        tail = ratio[-3:]
        settles = bool(tail.max() / tail.min() <= 1 + 3 * math.sqrt(2) * kap[-3:].max())
        ok &= below and exceeds and covers and decreasing and settles
        notes.append(f"{name}: sphere<=min(1,union) {below}, union({BOUND_GRID[0]:g} dB)={union[0]:.2f}, "
                     f"sphere>=sim-3k {covers}, ratio {np.array2string(ratio, precision=2)} "
                     f"decreasing {decreasing} settles {settles}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1800
    verdict(capsys, 6, "bound ordering", ok, "; ".join(notes) + f"; {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_07_estimator_consistency(capsys):
    t0 = time.perf_counter()
    code = bundled_code("bch_15_7")
    # Eb/N0 at which the ML word error rate is close to 1e-3 under Laplace noise
    db = 6.3
    params = GgdParams(1.0, sigma_at(code, db))
    dec = make_decoder(code)
    mc = mc_estimate(code, dec, params, 0.1, rng=71)
    ist, _ = is_estimate(code, dec, params, IsConfig(seed=72))
    tol = 3 * math.sqrt(mc.relative_error ** 2 + ist.relative_error ** 2)
    gap = abs(ist.wer - mc.wer) / mc.wer
    elapsed = time.perf_counter() - t0
    ok = 5e-4 < mc.wer < 2e-3 and gap <= tol and ist.samples < mc.samples and elapsed < 600
    verdict(capsys, 7, "estimator consistency", ok,
            f"MC {mc.wer:.3e} ({mc.samples} samples), IS {ist.wer:.3e} ({ist.samples} samples), "
            f"relative gap {gap:.3f} vs {tol:.3f}, {elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_08_unbiasedness(capsys):
    t0 = time.perf_counter()
    code = bundled_code("bch_15_7")
    db = 6.0
    params = GgdParams(1.0, sigma_at(code, db), code.n)
    dec = make_decoder(code)
    cfg = IsConfig(adapt=False, kappa_target=1e-6, max_samples=20_000, n_step=20_000)
    grid = init_histogram(cfg, code, params).grid
    runs = []
    for seed in np.random.SeedSequence(8).spawn(200):
        est, _ = is_estimate(code, dec, params, cfg, rng=seed)
        runs.append(est.wer)
    runs = np.array(runs)
    # plain MC of Pr(block error and r_min <= ||Z||_1 < r_max)
    rng = make_rng(88)
    hits, total = 0, 10 ** 7
    for _ in range(total // 500_000):
        z = ggd_sample(params, rng, size=(500_000, code.n))
        r = np.sum(np.abs(z), axis=1)
        err = dec.block_errors(-1.0 + z, params, rng)
        hits += int(np.sum(err & (r >= grid.r_min) & (r < grid.r_max)))
    ref = hits / total
    se = math.sqrt(runs.var(ddof=1) / runs.size + ref * (1 - ref) / total)
    z_score = abs(runs.mean() - ref) / se
    elapsed = time.perf_counter() - t0
    ok = z_score <= 3.0 and elapsed < 1800
    verdict(capsys, 8, "unbiasedness", ok,
            f"mean of 200 fixed-pmf runs {runs.mean():.4e}, MC reference {ref:.4e}, "
            f"{z_score:.2f} SE apart, {elapsed:.0f} s")


GAIN_GRID = {1.0: (8.0, 9.0, 10.0), 2.0: (6.5, 7.0, 7.5), 1.6: (7.0, 7.5, 8.0)}
PILOT_SAMPLES = 2 * 10 ** 7
GAIN_SEEDS = 5


def _pilot_histogram(code, p, db):
    """Error-ratio table from a long run at the top SNR (theta is SNR-invariant)."""
    cfg = IsConfig(kappa_target=1e-4, max_samples=PILOT_SAMPLES, seed=900)
    _, hist = is_estimate(code, make_decoder(code), GgdParams(p, sigma_at(code, db)), cfg)
    return hist


def _predicted(code, p, db):
    q = GainQuery(code, p, sigma_at(code, db))
    if p == 1:
        return asym_is_gain_l1(q)
    if p == 2:
        return asym_is_gain_l2(q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return asym_is_gain_general(q, mc_budget=100_000, rng=5).estimate


@pytest.mark.slow
def test_criterion_09_gain_prediction(capsys):
    t0 = time.perf_counter()
    code = bundled_code("bch_15_7")
    dec = make_decoder(code)
    ok, notes = True, []
    for p, grid in GAIN_GRID.items():
        pilot = _pilot_histogram(code, p, grid[-1])
        sim, pred, pe = [], [], []
        for i, db in enumerate(grid):
            ests = [is_estimate(code, dec, GgdParams(p, sigma_at(code, db)), IsConfig(), pilot,
                                np.random.SeedSequence([9, i, s]))[0] for s in range(GAIN_SEEDS)]
            wer = float(np.mean([e.wer for e in ests]))
            n_is = float(np.mean([e.samples for e in ests]))
            sim.append(100.0 / wer / n_is)
            pred.append(_predicted(code, p, db))
            pe.append(wer)
        ratio = np.array(sim) / np.array(pred)
        in_window = all(1e-6 <= x <= 1e-4 for x in pe)
        within = bool(np.all((ratio >= 0.5) & (ratio <= 2.0)))
        rising = bool(np.all(np.diff(sim) > 0))
        ok &= in_window and within and rising
        notes.append(f"p={p:g}: P {np.array2string(np.array(pe), precision=1)}, "
                     f"sim {np.array2string(np.array(sim), precision=1)}, "
                     f"pred {np.array2string(np.array(pred), precision=1)}, rising {rising}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 3600
    verdict(capsys, 9, "gain prediction", ok, "; ".join(notes) + f"; {elapsed:.0f} s")


HEADLINE_SAMPLES = 4.6e6


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason=(
    "optional stretch: with the zero-ratio repair rule the shells between the packing radius and "
    "the first observed error inherit that error's ratio and soak up samples; the kappa = 0.1 run "
    "needs far more than 3 x 4.6e6 samples (see the decisions log)"))
def test_criterion_10_headline_sample_count(capsys):
    t0 = time.perf_counter()
    code = bundled_code("bch_31_11")
    db = 9.0
    pilot = _pilot_histogram(code, 1.0, db)
    # beyond 3x the target the verdict is settled, so the run stops there
    cap = int(3 * HEADLINE_SAMPLES) + 1
    est, _ = is_estimate(code, make_decoder(code), GgdParams(1.0, sigma_at(code, db)),
                         IsConfig(seed=10, max_samples=cap), pilot)
    elapsed = time.perf_counter() - t0
    factor = est.samples / HEADLINE_SAMPLES
    ok = est.converged and 3e-9 <= est.wer <= 3e-8 and 1 / 3 <= factor <= 3
    verdict(capsys, 10, "headline sample count (optional)", ok,
            f"WER {est.wer:.2e} (kappa {est.relative_error:.2f}) at {db:g} dB after {est.samples} IS "
            f"samples ({factor:.2f}x the 4.6e6 target), {elapsed:.0f} s with pilot")


def test_criterion_11_precision_ladder(capsys):
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for n, d in ((15, 5), (23, 7), (31, 11)):
        # 100 rational radii from just above d to 4n
        for j in range(100):
            r = d + (4 * n - d) * (j + 1) / 100
            want = float(conditional_pep_l1_reference(n, d, r))
            got = conditional_pep_l1(n, d, float(r))
            if want == 0.0:
                worst = max(worst, abs(got))
            else:
                worst = max(worst, abs(got - want) / want)
            count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 300
    verdict(capsys, 11, "precision ladder", ok,
            f"max relative error {worst:.1e} over {count} (n, d, r) points, {elapsed:.0f} s")
