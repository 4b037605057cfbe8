"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also collected into
the terminal summary) before asserting.
"""
import io
import math
import time

import numpy as np
import pytest

from lessketch.bench import ExperimentConfig, OperatorTemplate, emit_svg_plot, run_ols_sweep
from lessketch.cli import main
from lessketch.data import gen_synthetic, write_csv
from lessketch.diagnostics import (
    hat_matrix_expectation_check,
    hw_tail_compare,
    psi2_estimate,
    sketch_leverage_uniformity,
    subspace_distortion,
    whitener_for,
)
from lessketch.estimators import (
    ConstrainedProblem,
    RegressionProblem,
    constrained_sketch_solve,
    l1_constrained_least_squares,
    loo_cv_loss,
    ols_error_law,
    randomized_svd_error,
    statdim,
    statdim_inverse,
)
from lessketch.leverage import exact_leverage_scores
from lessketch.linalg import solve_least_squares, stable_rank
from lessketch.sketches import Family, SketchSpec, apply_sketch, sample_hard_example, sketch, sketch_row_sampler


def verdict(log, number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(line)
    log.append(line)
    assert passed, line


def sweep(family, coherence, grid, trials):
    cfg = ExperimentConfig(synthetic_n_rows=2000, synthetic_d=10, synthetic_coherence=coherence,
                           n_grid=list(grid), trials=trials, operators=[OperatorTemplate(family)])
    return run_ols_sweep(cfg)


def test_criterion_01_gaussian_exact_law(acceptance_log):
    start = time.perf_counter()
    res = sweep(Family.GAUSSIAN, "low", (25, 40, 80), 2000)
    elapsed = time.perf_counter() - start
    z = [abs(r.mean_norm_err - ols_error_law(10, r.n)) / r.stderr for r in res]
    ok = all(v <= 3 for v in z) and elapsed < 120
    detail = ", ".join(f"n={r.n} mean={r.mean_norm_err:.4f} law={r.gaussian_formula:.4f} z={v:.2f}"
                       for r, v in zip(res, z))
    verdict(acceptance_log, 1, ok, f"{detail}; {elapsed:.1f}s")


def test_criterion_02_less_matches_gaussian_law(acceptance_log):
    start = time.perf_counter()
    parts, ok = [], True
    for coherence in ("low", "high"):
        for r in sweep(Family.LESS, coherence, (25, 40, 80), 2000):
            law = ols_error_law(10, r.n)
            budget = max(3 * r.stderr, 0.05 * law)
            ok &= abs(r.mean_norm_err - law) <= budget
            parts.append(f"{coherence} n={r.n} rel={r.mean_norm_err / law - 1:+.3f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 180
    verdict(acceptance_log, 2, ok, f"{', '.join(parts)}; {elapsed:.1f}s")


def test_criterion_03_uniform_degrades_on_high_coherence(acceptance_log):
    n = 40
    law = ols_error_law(10, n)
    (uni,) = sweep(Family.UNIFORM_ROWS, "high", (n,), 2000)
    (less,) = sweep(Family.LESS, "high", (n,), 2000)
    ok = uni.mean_norm_err >= 1.5 * law
    ok &= abs(less.mean_norm_err - law) <= max(3 * less.stderr, 0.05 * law)
    verdict(acceptance_log, 3, ok,
            f"uniform {uni.mean_norm_err / law:.2f}x law (degenerate {uni.degenerate_count}), "
            f"LESS {less.mean_norm_err / law:.3f}x law")


def naive_loo(x, y):
    total = 0.0
    for i in range(x.shape[0]):
        keep = np.arange(x.shape[0]) != i
        total += (x[i] @ solve_least_squares(x[keep], y[keep]) - y[i]) ** 2
    return total


def test_criterion_04_cv_shortcut(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    worst, done = 0.0, 0
    families = [Family.GAUSSIAN, Family.LESS, Family.LESS_UNIFORM, Family.SRHT, Family.UNIFORM_ROWS]
    while done < 200:
        d = int(rng.integers(1, 9))
        n_rows = int(rng.integers(d + 2, 201))
        n = int(rng.integers(d + 2, 41))
        a = rng.standard_normal((n_rows, d))
        p = RegressionProblem.from_data(a, a @ rng.standard_normal(d) + rng.standard_normal(n_rows))
        family = families[done % len(families)]
        if family is Family.SRHT and n > 2 ** math.ceil(math.log2(n_rows)):
            family = Family.GAUSSIAN
        pair = sketch(SketchSpec(family, n, seed=(404, done)), p.a, p.b, p.leverage)
        if np.linalg.matrix_rank(pair.sa) < d:
            continue
        lev = np.einsum("ij,ij->i", *(2 * [np.linalg.qr(pair.sa)[0]]))
        if lev.max() >= 1 - 1e-10:
            continue
        shortcut, naive = loo_cv_loss(p, pair), naive_loo(pair.sa, pair.sb)
        worst = max(worst, abs(shortcut - naive) / abs(naive))
        done += 1
    elapsed = time.perf_counter() - start
    verdict(acceptance_log, 4, worst <= 1e-8 and elapsed < 30,
            f"max relative gap {worst:.2e} over 200 instances; {elapsed:.1f}s")


def test_criterion_05_sketch_leverage_uniformity(acceptance_log):
    d, n = 20, 2000
    a = gen_synthetic(4000, d, "low", 1.0, 505).a
    prof = exact_leverage_scores(a)
    devs = np.array([sketch_leverage_uniformity(apply_sketch(SketchSpec("less", n, seed=(505, s)), a, prof))
                     for s in range(100)])
    hits = int(np.sum(devs <= 0.5))
    verdict(acceptance_log, 5, hits >= 95,
            f"{hits}/100 seeds with deviation <= 0.5 (median {np.median(devs):.2f}, max {devs.max():.2f})")


def test_criterion_06_hat_matrix_expectation(acceptance_log):
    a = gen_synthetic(200, 5, "low", 1.0, 606)
    p = RegressionProblem.from_data(a.a, a.b)
    g = hat_matrix_expectation_check(p, SketchSpec("gaussian", 25), 20000, seed=606)
    less = hat_matrix_expectation_check(p, SketchSpec("less", 25), 20000, seed=607)
    verdict(acceptance_log, 6, g <= 0.05 and less <= 0.10,
            f"Gaussian max deviation {g:.4f} (<= 0.05), LESS {less:.4f} (<= 0.10)")


def test_criterion_07_hanson_wright(acceptance_log):
    d = 20
    a = gen_synthetic(2000, d, "low", 1.0, 707).a
    rows = sketch_row_sampler(Family.LESS, a, profile=exact_leverage_scores(a))
    white = whitener_for(a)
    rng = np.random.default_rng(707)
    g = rng.standard_normal((d, d))
    v = rng.standard_normal(d)
    mats = {"I": np.eye(d), "psd": g @ g.T / d, "rank1": np.outer(v, v) / (v @ v)}
    ratios = {name: hw_tail_compare(rows, white, bmat, 100000, seed=(707, i)).ratio(0.99)
              for i, (name, bmat) in enumerate(mats.items())}
    hd = 64
    hard = lambda s: sample_hard_example(math.sqrt(hd), hd, 1, seed=s)[0]  # noqa: E731
    hard.batch = lambda gen, count: sample_hard_example(math.sqrt(hd), hd, count, seed=gen)
    blowup = hw_tail_compare(hard, np.eye(hd), np.eye(hd), 100000, seed=708).ratio(0.999)
    ok = all(r <= 2 for r in ratios.values()) and blowup > 3
    detail = ", ".join(f"{k} {r:.3f}x" for k, r in ratios.items())
    verdict(acceptance_log, 7, ok, f"LESS 0.99 ratios {detail}; hard example 0.999 ratio {blowup:.2f}x")


def test_criterion_08_psi2_calibration(acceptance_log):
    rng = np.random.default_rng(808)
    rad = psi2_estimate(rng.choice([-1.0, 1.0], size=1_000_000))
    gauss = psi2_estimate(rng.standard_normal(1_000_000))
    rad_err = abs(rad * math.sqrt(math.log(2)) - 1)
    gauss_err = abs(gauss / math.sqrt(8 / 3) - 1)
    verdict(acceptance_log, 8, rad_err <= 0.02 and gauss_err <= 0.03,
            f"Rademacher {rad:.4f} ({rad_err:.2%}), normal {gauss:.4f} ({gauss_err:.2%})")


def test_criterion_09_statdim_inverse(acceptance_log):
    rng = np.random.default_rng(909)
    q = np.linalg.qr(rng.standard_normal((30, 6)))[0]
    ident = max(abs(statdim_inverse(q, n) - (6 / n - 1)) for n in (0.5, 1.0, 2.0, 3.7, 5.9))
    worst = 0.0
    for _ in range(100):
        rows, cols = int(rng.integers(5, 40)), int(rng.integers(2, 12))
        cols = min(rows, cols)
        a = rng.standard_normal((rows, cols)) * np.exp(rng.uniform(-2, 2, cols))
        lam = float(np.exp(rng.uniform(-4, 4)))
        worst = max(worst, abs(statdim_inverse(a, statdim(a, lam)) - lam) / lam)
    verdict(acceptance_log, 9, ident <= 1e-10 and worst <= 1e-9,
            f"identity error {ident:.1e}, round-trip relative error {worst:.1e}")


def test_criterion_10_randomized_svd_parity(acceptance_log):
    rng = np.random.default_rng(1010)
    n_rows, d, n = 1000, 200, 10
    u = np.linalg.qr(rng.standard_normal((n_rows, d)))[0]
    v = np.linalg.qr(rng.standard_normal((d, d)))[0]
    a = (u * np.arange(1, d + 1) ** -0.15) @ v.T
    sr = stable_rank(a)
    prof = exact_leverage_scores(a)
    means = {}
    for family in (Family.LESS, Family.GAUSSIAN):
        errs = [randomized_svd_error(a, apply_sketch(SketchSpec(family, n, seed=(1010, t)), a, prof))
                for t in range(2000)]
        means[family] = math.fsum(errs) / len(errs)
    ratio = means[Family.LESS] / means[Family.GAUSSIAN]
    verdict(acceptance_log, 10, sr >= 4 * n and 0.9 <= ratio <= 1.1,
            f"stable rank {sr:.1f}, LESS/Gaussian mean error ratio {ratio:.4f}")


def test_criterion_11_lasso_sketch_and_solve(acceptance_log):
    rng = np.random.default_rng(1111)
    n_rows, d = 4000, 40
    a = rng.standard_normal((n_rows, d))
    w0 = np.zeros(d)
    w0[:3] = [3.0, -2.0, 1.5]
    b = a @ w0 + rng.standard_normal(n_rows)
    p = RegressionProblem.from_data(a, b)
    radius = float(np.abs(w0).sum())
    cp = ConstrainedProblem(p, radius, sparsity_hint=3)
    full = p.loss(l1_constrained_least_squares(a, b, radius))
    ratios = np.array([p.loss(constrained_sketch_solve(cp, SketchSpec("less", 400, seed=(1111, s)))) / full
                       for s in range(100)])
    hits = int(np.sum(ratios <= 1.1))
    verdict(acceptance_log, 11, hits >= 95, f"{hits}/100 seeds within 1.1x (max ratio {ratios.max():.3f})")


def test_criterion_12_low_distortion(acceptance_log):
    rng = np.random.default_rng(1212)
    a = rng.standard_normal((2000, 10))
    full = subspace_distortion(apply_sketch(SketchSpec("srht", 2048, seed=1212), a), a)
    prof = exact_leverage_scores(a)
    dist = np.array([subspace_distortion(apply_sketch(SketchSpec("less", 1000, seed=(1212, s)), a, prof), a)
                     for s in range(100)])
    hits = int(np.sum(dist <= 0.35))
    verdict(acceptance_log, 12, abs(full) <= 1e-8 and hits >= 95,
            f"full SRHT distortion {full:.1e}; LESS {hits}/100 seeds <= 0.35 (max {dist.max():.3f})")


def test_criterion_13_determinism(acceptance_log, tmp_path):
    ops = [OperatorTemplate(f) for f in Family]

    def run(workers):
        cfg = ExperimentConfig(synthetic_n_rows=500, synthetic_d=5, n_grid=[10, 20, 40], trials=50,
                               operators=ops, master_seed=1313, workers=workers)
        res = run_ols_sweep(cfg)
        csv_sink, svg_sink = io.BytesIO(), io.BytesIO()
        write_csv(res, csv_sink)
        emit_svg_plot(res, svg_sink)
        return csv_sink.getvalue(), svg_sink.getvalue()

    lib_same = run(1) == run(1) == run(4)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("synthetic.d = 5\nsynthetic.n_rows = 500\noperators = gaussian, less, srht\n"
                   "n_grid = 10, 20\ntrials = 30\nseed = 1313\n")
    codes = [main(["sweep-ols", "--config", str(cfg), "--out", str(tmp_path / k)]) for k in ("x", "y")]
    cli_same = all((tmp_path / "x" / f).read_bytes() == (tmp_path / "y" / f).read_bytes()
                   for f in ("results.csv", "plot.svg"))
    verdict(acceptance_log, 13, lib_same and cli_same and codes == [0, 0],
            f"library reruns identical: {lib_same}; CLI reruns identical: {cli_same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
