"""Empirical checks of how Gaussian-like a sketch is.

None of these are hypothesis tests; they compute statistics whose Gaussian
values are known (or simulated alongside) so a sketch can be compared to the
Gaussian embedding on the same footing.
"""
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import DimensionMismatch, RankDeficient, TooFewSamples, ZeroVector
from .linalg import qr_thin, range_basis
from .sketches import Family, apply_sketch, make_rng

__all__ = [
    "TailReport",
    "QUANTILE_LEVELS",
    "hanson_wright_stat",
    "hanson_wright_stats",
    "whitener_for",
    "hw_tail_compare",
    "psi2_estimate",
    "best_scalar",
    "subspace_distortion",
    "jl_distortion",
    "sketch_leverages",
    "sketch_leverage_uniformity",
    "hat_residual",
    "hat_matrix_expectation_check",
]

QUANTILE_LEVELS = (0.5, 0.9, 0.99, 0.999)


@dataclass
class TailReport:
    """Empirical quantiles of a statistic next to its Gaussian baseline."""

    statistic_name: str
    quantiles: Dict[float, float]
    trials: int
    reference_quantiles: Dict[float, float] = field(default_factory=dict)

    def ratio(self, level):
        """Quantile at ``level`` divided by the baseline quantile."""
        ref = self.reference_quantiles[level]
        return self.quantiles[level] / ref if ref else math.inf


def _sym(bmat):
    bmat = np.asarray(bmat, dtype=float)
    if bmat.ndim != 2 or bmat.shape[0] != bmat.shape[1]:
        raise DimensionMismatch(f"B must be square, got shape {bmat.shape}")
    return (bmat + bmat.T) / 2.0


def hanson_wright_stat(z, bmat):
    """``|z^T B z - tr(B)|``. Only the symmetric part of ``B`` is used."""
    z = np.asarray(z, dtype=float)
    sym = _sym(bmat)
    if z.shape != (sym.shape[0],):
        raise DimensionMismatch(f"z has shape {z.shape}, B is {sym.shape}")
    return float(abs(z @ sym @ z - np.trace(sym)))


def hanson_wright_stats(zs, bmat):
    """Row-wise :func:`hanson_wright_stat` for a ``(trials, d)`` matrix."""
    zs = np.atleast_2d(np.asarray(zs, dtype=float))
    sym = _sym(bmat)
    if zs.shape[1] != sym.shape[0]:
        raise DimensionMismatch(f"rows have dimension {zs.shape[1]}, B is {sym.shape}")
    return np.abs(np.einsum("ij,jk,ik->i", zs, sym, zs) - np.trace(sym))


def whitener_for(a):
    """``(A^T A)^{-1/2}``, the map that makes rows with second moment ``A^T A`` isotropic."""
    a = np.asarray(a, dtype=float)
    evals, evecs = np.linalg.eigh(a.T @ a)
    if evals[0] <= 1e-12 * evals[-1]:
        raise RankDeficient("A^T A is numerically singular")
    return (evecs / np.sqrt(evals)) @ evecs.T


def _quantiles(values, levels):
    qs = np.quantile(values, levels)
    return {float(lv): float(q) for lv, q in zip(levels, qs)}


def _draw_rows(row_sampler, trials, seed_seq):
    batch = getattr(row_sampler, "batch", None)
    if batch is not None:
        return np.asarray(batch(np.random.default_rng(seed_seq), trials), dtype=float)
    child_seeds = np.random.default_rng(seed_seq).integers(0, 2**63, size=trials)
    return np.array([row_sampler(int(s)) for s in child_seeds], dtype=float)


def hw_tail_compare(row_sampler, whitener, bmat, trials, seed=None,
                    levels=QUANTILE_LEVELS, name="hanson_wright"):
    """Tail quantiles of ``|z^T B z - tr B|`` for whitened sketch rows.

    Parameters
    ----------
    row_sampler : callable
        ``row_sampler(seed) -> (d,) array``; one raw sketch row per call. If
        it carries a ``batch(rng, count)`` attribute that is used instead.
    whitener : (d, d) array_like
        Applied to each row, ``z = whitener @ x``.
    bmat : (d, d) array_like
    trials : int
        At least 1000.
    seed : int or tuple, optional

    Returns
    -------
    TailReport
        ``reference_quantiles`` come from standard Gaussian rows with the same
        ``B`` and trial count.
    """
    if trials < 1000:
        raise TooFewSamples(f"need at least 1000 trials, got {trials}")
    whitener = np.asarray(whitener, dtype=float)
    root = np.random.SeedSequence(_entropy(seed))
    rows_seq, base_seq = root.spawn(2)
    zs = _draw_rows(row_sampler, trials, rows_seq) @ whitener.T
    gauss = np.random.default_rng(base_seq).standard_normal((trials, whitener.shape[0]))
    return TailReport(
        name,
        _quantiles(hanson_wright_stats(zs, bmat), levels),
        trials,
        _quantiles(hanson_wright_stats(gauss, bmat), levels),
    )


def _entropy(seed):
    if seed is None:
        return None
    if isinstance(seed, (tuple, list)):
        return [int(s) for s in seed]
    return int(seed)


def psi2_estimate(samples, rel_tol=1e-6, winsor=1e-4):
    """Plug-in sub-gaussian (Orlicz psi_2) norm of a scalar sample.

    Finds by bisection the smallest ``t`` with mean ``exp(X^2 / t^2) <= 2``,
    where the squared samples are winsorized at their ``1 - winsor`` quantile
    so a single extreme draw cannot dominate. Consistent, but biased low for
    very heavy tails.

    Raises
    ------
    TooFewSamples
        With fewer than 10000 samples.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 10000:
        raise TooFewSamples(f"need at least 10000 samples, got {x.size}")
    sq = x * x
    sq = np.minimum(sq, np.quantile(sq, 1.0 - winsor))
    top = float(sq.max())
    if top == 0.0:
        return 0.0
    log_target = math.log(2.0) + math.log(sq.size)

    def too_small(t):
        return logsumexp(sq / (t * t)) > log_target

    lo, hi = 0.0, math.sqrt(top / math.log(2.0))
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid == 0.0 or too_small(mid):
            lo = mid
        else:
            hi = mid
    return hi


def best_scalar(smax, smin):
    """``sqrt(2 / (smax^2 + smin^2))``, the single rescaling used by the distortion checks."""
    return math.sqrt(2.0 / (smax * smax + smin * smin))


def subspace_distortion(sa, a):
    """Distortion of ``S`` on ``span(A)``.

    With ``W = (S A)(A^T A)^{-1/2}`` and extreme singular values ``smax``,
    ``smin``, returns ``max(alpha smax, 1 / (alpha smin)) - 1`` for
    ``alpha = best_scalar(smax, smin)``.
    """
    sa = np.asarray(sa, dtype=float)
    _, r = qr_thin(a)
    # (A^T A)^{-1/2} and R^{-1} differ by an orthogonal factor
    w = solve_triangular(r, sa.T, trans="T").T
    sv = np.linalg.svd(w, compute_uv=False)
    smax, smin = float(sv[0]), float(sv[-1])
    if smin <= 1e-12 * smax or sv.size < r.shape[0]:
        raise RankDeficient("sketch is rank deficient on span(A)")
    alpha = best_scalar(smax, smin)
    return max(alpha * smax, 1.0 / (alpha * smin)) - 1.0


def jl_distortion(sa_vectors, originals):
    """Distortion on a finite point set; points are the columns.

    Returns ``max_j |alpha ||S v_j|| / ||v_j|| - 1|`` with
    ``alpha = best_scalar`` of the extreme norm ratios.
    """
    sketched = np.asarray(sa_vectors, dtype=float)
    originals = np.asarray(originals, dtype=float)
    if sketched.ndim == 1:
        sketched, originals = sketched[:, None], originals[:, None]
    if sketched.shape[1] != originals.shape[1]:
        raise DimensionMismatch("sketched and original point sets differ in size")
    base = np.linalg.norm(originals, axis=0)
    if np.any(base == 0):
        raise ZeroVector("an original point is zero")
    ratios = np.linalg.norm(sketched, axis=0) / base
    alpha = best_scalar(ratios.max(), ratios.min()) if ratios.max() > 0 else 1.0
    return float(np.max(np.abs(alpha * ratios - 1.0)))


def sketch_leverages(sa):
    """Row leverage scores of the sketched matrix."""
    q, _ = qr_thin(sa)
    return np.einsum("ij,ij->i", q, q)


def sketch_leverage_uniformity(sa):
    """``max_i |l_i(SA) n / d - 1|``: zero when all rows are equally influential."""
    sa = np.asarray(sa, dtype=float)
    n, d = sa.shape
    lev = sketch_leverages(sa)
    total = float(lev.sum())
    # leverage scores are the diagonal of a rank-d projection
    assert abs(total - d) <= 1e-6, f"leverage scores sum to {total}, expected {d}"
    return float(np.max(np.abs(lev * n / d - 1.0)))


def hat_residual(sa, sv):
    """``||(I - H_hat) S v||^2`` per column of ``sv``, ``H_hat`` projecting on ``span(S A)``."""
    sv = np.asarray(sv, dtype=float)
    vector = sv.ndim == 1
    if vector:
        sv = sv[:, None]
    basis = range_basis(sa)
    resid = sv - basis @ (basis.T @ sv)
    out = np.einsum("ij,ij->j", resid, resid)
    return float(out[0]) if vector else out


def hat_matrix_expectation_check(p, spec, trials, seed=None, n_probes=10, profile=None):
    """Monte Carlo check of ``E[S^T (I - H_hat) S] ~ (1 - d/n)(I - H)``.

    Draws ``n_probes`` fixed random vectors orthogonal to ``span(A)``,
    averages ``v^T S^T (I - H_hat) S v`` over ``trials`` independent sketches
    and divides by ``(1 - d/n) ||v||^2``. Returns the largest deviation of
    that ratio from one.
    """
    if trials < 1000:
        raise TooFewSamples(f"need at least 1000 trials, got {trials}")
    d, n = p.d, spec.n
    if n <= d + 1:
        raise ValueError(f"need n > d + 1, got n={n}, d={d}")
    if spec.family is Family.LESS and profile is None:
        profile = p.leverage
    base = _entropy(seed)
    base = [] if base is None else (base if isinstance(base, list) else [base])
    rng = make_rng(tuple(base) + (0x9E0B,))
    probes = rng.standard_normal((p.n_rows, n_probes))
    q = p.qr.q
    probes -= q @ (q.T @ probes)
    joint = np.column_stack([p.a, probes])
    totals = np.zeros(n_probes)
    for t in range(trials):
        sk = apply_sketch(spec.with_seed(tuple(base) + (t,)), joint, profile, d=d)
        totals += hat_residual(sk[:, :d], sk[:, d:])
    target = (1.0 - d / n) * np.einsum("ij,ij->j", probes, probes)
    return float(np.max(np.abs(totals / trials / target - 1.0)))
