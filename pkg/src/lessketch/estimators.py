"""Sketch-and-solve estimators and the closed-form quantities they are
compared against."""
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq

from .errors import (
    DimensionTooLarge,
    LeverageAtOne,
    NoConvergence,
    OutOfRange,
    RankDeficient,
    RankDeficientSketch,
    SketchTooSmall,
)
from .leverage import exact_leverage_scores
from .linalg import ThinQR, qr_thin, range_basis, spectral_norm
from .sketches import Family, make_rng, sketch

__all__ = [
    "RegressionProblem",
    "ConstrainedProblem",
    "SolveResult",
    "RANGE_CLAMP",
    "MAX_REDRAWS",
    "ols_error_law",
    "sketch_and_solve_ols",
    "loo_cv_loss",
    "l1_ball_project",
    "l1_constrained_least_squares",
    "constrained_sketch_solve",
    "gaussian_width_mc",
    "subspace_support",
    "restricted_condition_small",
    "randomized_svd_error",
    "statdim",
    "statdim_inverse",
]

#: Entries of sketched solutions are clamped to [-RANGE_CLAMP, RANGE_CLAMP].
RANGE_CLAMP = 1e12
#: Extra sketch draws allowed when the sketched matrix loses rank.
MAX_REDRAWS = 3
_RETRY_TAG = 0x5E7C


@dataclass(frozen=True)
class RegressionProblem:
    """Least squares task ``min_w ||a w - b||^2`` with its exact optimum cached."""

    a: np.ndarray
    b: np.ndarray
    qr: ThinQR = field(repr=False)
    w_star: np.ndarray
    loss_star: float

    @classmethod
    def from_data(cls, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.ndim != 2 or b.shape != (a.shape[0],):
            raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
        qr = qr_thin(a)
        w_star = solve_triangular(qr.r, qr.q.T @ b)
        resid = a @ w_star - b
        return cls(a, b, qr, w_star, float(resid @ resid))

    @property
    def n_rows(self):
        return self.a.shape[0]

    @property
    def d(self):
        return self.a.shape[1]

    @cached_property
    def leverage(self):
        return exact_leverage_scores(self.a)

    @property
    def degenerate(self):
        """True when ``b`` lies in the column span of ``a`` (zero optimal loss)."""
        return self.loss_star <= 1e-20 * float(self.b @ self.b)

    def loss(self, w):
        r = self.a @ w - self.b
        return float(r @ r)

    def excess_loss(self, w):
        # L(w) - L(w*) = ||A (w - w*)||^2 because the optimal residual is
        # orthogonal to span(A); this avoids cancellation.
        diff = self.a @ (np.asarray(w) - self.w_star)
        return float(diff @ diff)


@dataclass(frozen=True)
class ConstrainedProblem:
    """Least squares restricted to the l1 ball of the given radius."""

    base: RegressionProblem
    radius: float
    sparsity_hint: int = 0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")


class SolveResult(NamedTuple):
    w: np.ndarray
    normalized_error: float
    degenerate: bool
    redraws: int


def ols_error_law(d, n):
    """Expected excess loss of Gaussian sketch-and-solve, relative to L(w*).

    Returns ``d / (n - d - 1)``.
    """
    if n <= d + 1:
        raise SketchTooSmall(f"need n >= d + 2, got n={n}, d={d}")
    return d / (n - d - 1)


def _retry_seed(seed, attempt):
    if attempt == 0:
        return seed
    if isinstance(seed, (tuple, list)):
        return tuple(seed) + (_RETRY_TAG, attempt)
    if isinstance(seed, np.random.Generator):
        return seed
    return (0 if seed is None else int(seed), _RETRY_TAG, attempt)


def _sketch_full_rank(p, spec, profile=None):
    """Draw a sketch of ``(p.a, p.b)``; redraw while ``S A`` is rank deficient."""
    if spec.family is Family.LESS and profile is None:
        profile = p.leverage
    for attempt in range(MAX_REDRAWS + 1):
        pair = sketch(spec.with_seed(_retry_seed(spec.seed, attempt)), p.a, p.b, profile)
        try:
            qr = qr_thin(pair.sa)
        except RankDeficient:
            continue
        return pair, qr, attempt
    raise RankDeficientSketch(
        f"sketched matrix was rank deficient on {MAX_REDRAWS + 1} draws"
    )


def sketch_and_solve_ols(p, spec, profile=None):
    """Solve the sketched least squares problem and report its error.

    Parameters
    ----------
    p : RegressionProblem
    spec : SketchSpec
    profile : LeverageProfile, optional
        Overrides ``p.leverage`` for the LESS family (e.g. approximate scores).

    Returns
    -------
    SolveResult
        ``normalized_error = (L(w_hat) - L(w*)) / L(w*)``; it is ``inf`` with
        ``degenerate=True`` when ``L(w*) = 0``.

    Raises
    ------
    RankDeficientSketch
        When ``S A`` stays rank deficient after ``MAX_REDRAWS`` redraws.
    """
    pair, qr, attempt = _sketch_full_rank(p, spec, profile)
    w = solve_triangular(qr.r, qr.q.T @ pair.sb)
    np.clip(w, -RANGE_CLAMP, RANGE_CLAMP, out=w)
    if p.degenerate:
        return SolveResult(w, math.inf, True, attempt)
    return SolveResult(w, p.excess_loss(w) / p.loss_star, False, attempt)


def loo_cv_loss(p, sketched):
    """Leave-one-out CV loss of the sketched problem via the leverage shortcut.

    With ``X = S A``, ``y = S b`` and ``l_i`` the leverage of row ``i`` of
    ``X``, returns ``sum_i ((x_i^T w_hat - y_i) / (1 - l_i))^2``. This equals
    refitting without row ``i`` and scoring row ``i``, for every ``i``.

    Raises
    ------
    LeverageAtOne
        If some ``l_i >= 1 - 1e-10``.
    """
    x = np.asarray(sketched.sa, dtype=float)
    y = np.asarray(sketched.sb, dtype=float)
    if x.shape[1] != p.d:
        raise ValueError(f"sketch has {x.shape[1]} columns, problem has {p.d}")
    q, r = qr_thin(x)
    w = solve_triangular(r, q.T @ y)
    lev = np.einsum("ij,ij->i", q, q)
    if np.any(lev >= 1.0 - 1e-10):
        raise LeverageAtOne("a sketch row has leverage one; leave-one-out is undefined")
    resid = (x @ w - y) / (1.0 - lev)
    return float(resid @ resid)


def l1_ball_project(w, radius):
    """Euclidean projection onto ``{v : ||v||_1 <= radius}``.

    Sort-based soft thresholding: finds the level ``theta`` with
    ``sum_i max(|w_i| - theta, 0) = radius``.
    """
    w = np.asarray(w, dtype=float)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    mag = np.abs(w)
    if mag.sum() <= radius:
        return w.copy()
    if radius == 0:
        return np.zeros_like(w)
    srt = np.sort(mag)[::-1]
    css = np.cumsum(srt) - radius
    ranks = np.arange(1, w.size + 1)
    rho = np.nonzero(srt - css / ranks > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.sign(w) * np.maximum(mag - theta, 0.0)


def _objective(x, y, w):
    r = x @ w - y
    return float(r @ r)


def l1_constrained_least_squares(x, y, radius, tol=1e-8, max_iter=10000, history=None):
    """``argmin ||x w - y||^2`` over the l1 ball, by accelerated projected gradient.

    FISTA with function-value adaptive restart and step ``1 / L``, where ``L``
    is twice the top eigenvalue of ``x^T x`` (power iteration). Stops once the
    gradient mapping has norm ``<= tol * ||x^T y||``.

    If ``history`` is a list, the objective of every accepted iterate is
    appended to it.

    Raises
    ------
    NoConvergence
        If ``max_iter`` is reached with the mapping norm above ``100 * tol``
        (relative).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gram = x.T @ x
    xty = x.T @ y
    lips = 2.0 * spectral_norm(x) ** 2 * (1.0 + 1e-6)
    scale = max(np.linalg.norm(xty), np.finfo(float).tiny)
    if lips == 0.0:
        return np.zeros(x.shape[1])

    def grad(w):
        return 2.0 * (gram @ w - xty)

    w = np.zeros(x.shape[1])
    v = w.copy()
    t = 1.0
    f_prev = _objective(x, y, w)
    mapping = math.inf
    for _ in range(max_iter):
        w_next = l1_ball_project(v - grad(v) / lips, radius)
        f_next = _objective(x, y, w_next)
        if f_next > f_prev:
            # restart momentum from the last accepted iterate
            v = w
            t = 1.0
            w_next = l1_ball_project(w - grad(w) / lips, radius)
            f_next = _objective(x, y, w_next)
        g_w = grad(w_next)
        mapping = lips * np.linalg.norm(w_next - l1_ball_project(w_next - g_w / lips, radius))
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        v = w_next + ((t - 1.0) / t_next) * (w_next - w)
        w, t, f_prev = w_next, t_next, f_next
        if history is not None:
            history.append(f_next)
        if mapping <= tol * scale:
            return w
    if mapping > 100.0 * tol * scale:
        raise NoConvergence(f"gradient mapping {mapping:.3g} after {max_iter} iterations")
    return w


def constrained_sketch_solve(cp, spec, tol=1e-8, profile=None, max_iter=10000):
    """Sketch ``(A, b)`` and solve the l1-constrained sketched problem."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    pair, _, _ = _sketch_full_rank(cp.base, spec, profile)
    return l1_constrained_least_squares(pair.sa, pair.sb, cp.radius, tol, max_iter)


def subspace_support(u_basis):
    """Support oracle ``g -> ||U^T g||`` of the unit sphere in ``span(U)``."""
    u = np.asarray(u_basis, dtype=float)
    return lambda g: float(np.linalg.norm(u.T @ g))


def gaussian_width_mc(u_basis, support_fn: Callable, trials, seed=None):
    """Monte Carlo Gaussian width ``E sup_{u in T} |g^T u|``.

    ``support_fn(g)`` must return the supremum over the target set ``T`` for
    one draw ``g ~ N(0, I_N)`` with ``N = u_basis.shape[0]``.

    Returns
    -------
    (mean, stderr)
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    dim = np.asarray(u_basis).shape[0]
    rng = make_rng(seed)
    values = np.array([support_fn(rng.standard_normal(dim)) for _ in range(trials)])
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(trials))


def restricted_condition_small(a, s):
    """Heuristic l1-restricted condition number for small ``d``.

    Returns ``max_i ||A[:, i]|| / gamma`` where ``gamma`` is the smallest
    singular value over all column submatrices of size ``min(4 s, d)``. This
    bounds the restricted minimum ``gamma_s^-`` from below, so the result is
    an upper proxy for the restricted condition number rather than its exact
    value. Brute force, hence limited to ``d <= 20``.
    """
    a = np.asarray(a, dtype=float)
    d = a.shape[1]
    if d > 20:
        raise DimensionTooLarge(f"brute force limited to d <= 20, got {d}")
    if s < 1:
        raise ValueError("sparsity must be >= 1")
    size = min(4 * s, d)
    gram = a.T @ a
    subsets = np.array(list(itertools.combinations(range(d), size)))
    lam_min = math.inf
    for chunk in np.array_split(subsets, max(1, len(subsets) // 4096)):
        sub = gram[chunk[:, :, None], chunk[:, None, :]]
        lam_min = min(lam_min, float(np.linalg.eigvalsh(sub)[:, 0].min()))
    col_max = float(np.sqrt(np.diag(gram).max()))
    sigma_min = math.sqrt(max(lam_min, 0.0))
    return math.inf if sigma_min == 0.0 else col_max / sigma_min


def randomized_svd_error(a, sketched_rows):
    """``||A - A P||_F^2`` for ``P`` the projector onto the row span of the sketch."""
    a = np.asarray(a, dtype=float)
    rows = np.atleast_2d(np.asarray(sketched_rows, dtype=float))
    if rows.shape[1] != a.shape[1]:
        raise ValueError(f"sketch rows have {rows.shape[1]} columns, A has {a.shape[1]}")
    basis = range_basis(rows.T)
    resid = a - (a @ basis) @ basis.T
    return float(np.sum(resid * resid))


def _sq_singular_values(a):
    a = np.asarray(a, dtype=float)
    eig = np.linalg.eigvalsh(a.T @ a)
    cutoff = 1e-12 * max(eig.max(initial=0.0), np.finfo(float).tiny)
    return eig[eig > cutoff]


def statdim(a, lam):
    """``tr A^T A (A^T A + lam I)^{-1} = sum_j s_j^2 / (s_j^2 + lam)``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    sig2 = _sq_singular_values(a)
    return float(np.sum(sig2 / (sig2 + lam)))


def statdim_inverse(a, n):
    """The ``lam >= 0`` at which :func:`statdim` equals ``n``.

    Raises
    ------
    OutOfRange
        Unless ``0 < n < rank(a)``.
    """
    sig2 = _sq_singular_values(a)
    rank = sig2.size
    if not 0 < n < rank:
        raise OutOfRange(f"target {n} outside (0, {rank})")

    def gap(lam):
        return float(np.sum(sig2 / (sig2 + lam))) - n

    hi = float(sig2.max())
    while gap(hi) >= 0:
        hi *= 2.0
    return brentq(gap, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
