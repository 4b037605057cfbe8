import math

import numpy as np
import pytest
from scipy.linalg import hadamard

from lessketch.errors import InvalidDistribution, SketchTooLarge
from lessketch.leverage import LeverageProfile, exact_leverage_scores
from lessketch.sketches import (
    Family,
    SketchSpec,
    apply_sketch,
    gaussianized_sample,
    make_rng,
    sample_hard_example,
    sample_sketch_rows,
    sketch,
    sketch_gaussian,
    sketch_less,
    sketch_less_uniform,
    sketch_srht,
    sketch_uniform_rows,
)


def uniform_profile(n_rows, d):
    scores = np.full(n_rows, d / n_rows)
    return LeverageProfile(scores, np.full(n_rows, 1.0 / n_rows), d / n_rows, True, d)


def explicit_matrix(spec, n_rows, profile=None, d=None):
    # S itself, by sketching the identity
    return apply_sketch(spec, np.eye(n_rows), profile, d=d)


def test_family_parse():
    assert Family.parse("LESS") is Family.LESS
    assert Family.parse("uniform") is Family.UNIFORM_ROWS
    assert Family.parse(Family.SRHT) is Family.SRHT
    with pytest.raises(ValueError):
        Family.parse("cauchy")


def test_spec_resolve_k():
    spec = SketchSpec("less", 10)
    assert spec.resolve_k(4) == 4
    assert SketchSpec("less", 10, dense=True).resolve_k(4) == math.ceil(4 * math.log(10 * 4 / 1e-3))
    assert SketchSpec("less", 10, k=2).resolve_k(4) == 2
    with pytest.raises(ValueError):
        SketchSpec("less", 10, k=9).resolve_k(4, n_rows=5)
    with pytest.raises(ValueError):
        SketchSpec("gaussian", 0)


def test_gaussian_scalar_case():
    draws = np.array([sketch_gaussian(np.eye(1), np.zeros(1), 1, seed=s).sa[0, 0] for s in range(4000)])
    assert abs(draws.mean()) < 3 / math.sqrt(4000)
    assert abs(draws.var() - 1) < 0.1


@pytest.mark.parametrize("family", list(Family))
def test_fixed_seed_is_bit_identical(family):
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((50, 3)), rng.standard_normal(50)
    prof = exact_leverage_scores(a)
    spec = SketchSpec(family, 20, seed=(7, 1))
    first, second = sketch(spec, a, b, prof), sketch(spec, a, b, prof)
    np.testing.assert_array_equal(first.sa, second.sa)
    np.testing.assert_array_equal(first.sb, second.sb)
    other = sketch(spec.with_seed((7, 2)), a, b, prof)
    assert not np.array_equal(first.sa, other.sa)


def test_gaussian_isotropy_oracle():
    n_rows, n = 100, 50
    e1 = np.zeros(n_rows)
    e1[0] = 1.0
    vals = [n * np.sum(apply_sketch(SketchSpec("gaussian", n, seed=s), e1) ** 2) / n for s in range(10000)]
    # n * ||S e_1||^2 has mean n; normalizing by n gives 1
    assert np.mean(vals) == pytest.approx(1.0, abs=0.05)


def test_less_single_row():
    a = np.array([[2.0, -3.0]])
    prof = LeverageProfile(np.array([1.0]), np.array([1.0]), 1.0, True, 2)
    out = apply_sketch(SketchSpec("less", 6, k=1, seed=3), a, prof)
    scaled = out * math.sqrt(6)
    for row in scaled:
        assert np.allclose(row, a[0]) or np.allclose(row, -a[0])


@pytest.mark.parametrize("family", [Family.LESS, Family.LESS_UNIFORM])
def test_less_rows_touch_at_most_k_inputs(family):
    n_rows, k = 40, 3
    prof = exact_leverage_scores(np.random.default_rng(1).standard_normal((n_rows, 5)))
    s = explicit_matrix(SketchSpec(family, 30, k=k, seed=4), n_rows, prof, d=5)
    assert np.all(np.count_nonzero(s, axis=1) <= k)


def test_less_isotropy_uniform_probs():
    n_rows, k, count = 20, 5, 20000
    rows = sample_sketch_rows(Family.LESS, np.eye(n_rows), count, make_rng(5), k=k,
                              profile=uniform_profile(n_rows, 2))
    second_moment = rows.T @ rows / count
    np.testing.assert_allclose(second_moment, np.eye(n_rows), atol=0.05)


def isotropy_zscores(family, n_rows, n, seeds, profile=None):
    mats = np.array([
        (lambda s: s.T @ s)(explicit_matrix(SketchSpec(family, n, k=2, seed=t), n_rows, profile, d=2))
        for t in range(seeds)
    ])
    mean = mats.mean(axis=0)
    se = mats.std(axis=0, ddof=1) / math.sqrt(seeds)
    target = np.eye(mean.shape[0])
    live = se > 0
    assert np.all(np.abs(mean - target)[~live] < 1e-12)
    return np.abs(mean - target)[live] / se[live]


@pytest.mark.parametrize("family", list(Family))
def test_isotropy_every_family(family):
    n_rows = 6 if family is not Family.SRHT else 8
    prof = exact_leverage_scores(np.random.default_rng(2).standard_normal((n_rows, 2)))
    z = isotropy_zscores(family, n_rows, 4, 3000, prof)
    # 36 entries; a 4.5 sigma cap keeps the false-alarm rate negligible
    assert z.max() < 4.5


def test_srht_full_size_is_isometry():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((16, 4))
    out = sketch_srht(a, np.zeros(16), 16, seed=1, signs=np.ones(16)).sa
    np.testing.assert_allclose(out, hadamard(16) @ a / 4, atol=1e-12)
    for seed in range(5):
        sa = sketch_srht(a, np.zeros(16), 16, seed=seed).sa
        x = rng.standard_normal(4)
        assert abs(np.linalg.norm(sa @ x) - np.linalg.norm(a @ x)) <= 1e-10 * np.linalg.norm(a @ x)


def test_srht_two_by_two_by_hand():
    a = np.array([[1.0, 2.0], [3.0, -1.0]])
    seed = 11
    rng = make_rng(seed)
    signs = rng.integers(0, 2, size=2).astype(float) * 2 - 1
    keep = np.sort(rng.choice(2, size=1, replace=False))
    h2 = np.array([[1.0, 1.0], [1.0, -1.0]])
    expected = (h2 @ (signs[:, None] * a))[keep]
    out = sketch_srht(a, np.zeros(2), 1, seed=seed).sa
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_srht_pads_and_rejects_oversize():
    a = np.random.default_rng(4).standard_normal((5, 2))
    assert sketch_srht(a, np.zeros(5), 8, seed=0).sa.shape == (8, 2)
    with pytest.raises(SketchTooLarge):
        sketch_srht(a, np.zeros(5), 9, seed=0)


def test_srht_norm_preservation_monte_carlo():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((12, 3))
    x = rng.standard_normal(3)
    ax = a @ x
    vals = np.array([np.sum(apply_sketch(SketchSpec("srht", 4, seed=s), ax) ** 2) for s in range(5000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - ax @ ax) <= 3 * se


def test_uniform_rows_single_row():
    a = np.array([[1.5, -2.0]])
    for n in (1, 3, 10):
        sa = sketch_uniform_rows(a, np.zeros(1), n, seed=0).sa
        np.testing.assert_allclose(sa, np.tile(a, (n, 1)) / math.sqrt(n))
        np.testing.assert_allclose(sa.T @ sa, a.T @ a)


def test_wrappers_and_validation():
    rng = np.random.default_rng(6)
    a, b = rng.standard_normal((30, 3)), rng.standard_normal(30)
    prof = exact_leverage_scores(a)
    assert sketch_less(a, b, 10, 3, prof, seed=1).sa.shape == (10, 3)
    assert sketch_less_uniform(a, b, 10, 3, seed=1).sb.shape == (10,)
    with pytest.raises(InvalidDistribution):
        sketch_less(a, b, 10, 3, prof.probs, seed=1)
    with pytest.raises(InvalidDistribution):
        apply_sketch(SketchSpec("less", 5), a)
    bad = LeverageProfile(prof.scores, prof.probs * 2, prof.coherence, True, 3)
    with pytest.raises(InvalidDistribution):
        apply_sketch(SketchSpec("less", 5), a, bad)
    with pytest.raises(ValueError):
        sketch(SketchSpec("gaussian", 5), a, b[:-1])


def test_less_uniform_default_k_ignores_response_column():
    a = np.random.default_rng(7).standard_normal((40, 2))
    s = apply_sketch(SketchSpec("lessuniform", 10, seed=0), np.eye(40), d=2)
    assert np.all(np.count_nonzero(s, axis=1) <= 2)
    out = sketch(SketchSpec("lessuniform", 10, seed=0), a, np.zeros(40))
    np.testing.assert_allclose(out.sa, s @ a, atol=1e-12)


def test_hard_example_support_and_isotropy():
    ones = sample_hard_example(1, 5, 100, seed=0)
    assert set(np.unique(ones)) <= {-1.0, 1.0}
    x = sample_hard_example(3, 4, 100000, seed=1)
    assert set(np.unique(x)) <= {-3.0, 0.0, 3.0}
    np.testing.assert_allclose(x.T @ x / x.shape[0], np.eye(4), atol=0.05)
    frac = np.count_nonzero(x) / x.size
    se = math.sqrt((1 / 9) * (8 / 9) / x.size)
    assert abs(frac - 1 / 9) <= 3 * se


def test_gaussianized_sample():
    rows = np.random.default_rng(2).standard_normal((6, 3))
    out = gaussianized_sample(rows, 1, seed=4)
    assert np.allclose(out, rows[0]) or np.allclose(out, -rows[0])
    x = np.array([1.0, -2.0, 2.0])
    same = np.tile(x, (4, 1))
    draws = np.array([gaussianized_sample(same, 4, seed=s) for s in range(2000)])
    norms = np.linalg.norm(draws, axis=1) / np.linalg.norm(x)
    assert set(np.round(norms, 12)) <= {0.0, 1.0, 2.0}
    assert np.all(np.abs(draws.mean(axis=0)) < 0.2)


def test_gaussianized_covariance():
    rows = np.random.default_rng(3).standard_normal((5, 3))
    draws = np.array([gaussianized_sample(rows, 5, seed=s) for s in range(50000)])
    cov = draws.T @ draws / draws.shape[0]
    target = rows.T @ rows / 5
    assert np.linalg.norm(cov - target) <= 0.05 * np.linalg.norm(target)
