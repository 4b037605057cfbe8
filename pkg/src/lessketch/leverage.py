"""Statistical leverage scores and the LESS row-sampling distribution."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .linalg import fwht_inplace, next_power_of_two, qr_thin

__all__ = [
    "LeverageProfile",
    "MIXTURE_C",
    "exact_leverage_scores",
    "approx_leverage_scores",
    "mixture_probabilities",
]

#: Mixing constant: p_i = (l_i/d + 1/N) / MIXTURE_C.
MIXTURE_C = 2.0


@dataclass(frozen=True)
class LeverageProfile:
    """Per-row leverage scores of an ``N x d`` matrix and derived probabilities.

    Attributes
    ----------
    scores : (N,) ndarray
        ``l_i = a_i^T (A^T A)^{-1} a_i``.
    probs : (N,) ndarray
        Sampling distribution used by LESS, see :func:`mixture_probabilities`.
    coherence : float
        ``max_i l_i``.
    exact : bool
        False when the scores come from a sketch.
    d : int
        Column count of the matrix the scores belong to.
    """

    scores: np.ndarray
    probs: np.ndarray
    coherence: float
    exact: bool
    d: int

    @property
    def n_rows(self):
        return self.scores.shape[0]


def _profile(scores, d, exact):
    scores = np.asarray(scores, dtype=float)
    probs = mixture_probabilities_from_scores(scores, d)
    return LeverageProfile(scores, probs, float(scores.max()), exact, int(d))


def exact_leverage_scores(a):
    """Leverage scores from the squared row norms of the thin-QR factor ``Q``.

    Raises
    ------
    RankDeficient
        If ``a`` does not have full column rank.
    """
    q, _ = qr_thin(a)
    return _profile(np.einsum("ij,ij->i", q, q), q.shape[1], exact=True)


def _srht_rows(a, n_sketch, rng):
    # SRHT without the 1/sqrt(n) scale: only the triangular factor's row space
    # matters up to a scalar, and the scalar is restored below.
    n_rows = a.shape[0]
    padded = next_power_of_two(n_rows)
    work = np.zeros((padded, a.shape[1]))
    work[:n_rows] = a * rng.choice((-1.0, 1.0), size=n_rows)[:, None]
    fwht_inplace(work)
    keep = rng.choice(padded, size=min(n_sketch, padded), replace=False)
    return work[np.sort(keep)] / np.sqrt(len(keep))


def approx_leverage_scores(a, oversample=8, seed=None):
    """Leverage scores estimated through an SRHT sketch of ``a``.

    An SRHT ``S0`` with ``4 * d * oversample`` rows (capped at the padded row
    count) is applied to ``a``; with ``S0 A = Q0 R0`` the estimate for row
    ``i`` is ``||a_i R0^{-1}||^2``.

    Raises
    ------
    RankDeficient
        If the sketched matrix lost rank; retry with a larger ``oversample``.
    """
    a = np.asarray(a, dtype=float)
    n_rows, d = a.shape
    rng = np.random.default_rng(seed)
    sketched = _srht_rows(a, 4 * d * int(oversample), rng)
    _, r0 = qr_thin(sketched)
    whitened = solve_triangular(r0, a.T, trans="T").T
    return _profile(np.einsum("ij,ij->i", whitened, whitened), d, exact=False)


def mixture_probabilities_from_scores(scores, d):
    scores = np.asarray(scores, dtype=float)
    n_rows = scores.shape[0]
    probs = (scores / d + 1.0 / n_rows) / MIXTURE_C
    return probs / probs.sum()


def mixture_probabilities(profile, n_rows=None):
    """``p_i = (l_i/d + 1/N) / 2``, renormalized to sum to one.

    The equal-weight mix guarantees ``p_i >= 1/(2N)`` and ``p_i >= l_i/(2d)``
    (up to the renormalization, which is exact for exact scores).
    """
    if n_rows is not None and n_rows != profile.n_rows:
        raise ValueError(f"profile has {profile.n_rows} rows, not {n_rows}")
    return mixture_probabilities_from_scores(profile.scores, profile.d)
