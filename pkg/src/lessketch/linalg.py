"""Dense linear algebra primitives.

Matrices are plain 2-D float64 ``numpy`` arrays and vectors are 1-D arrays.
Everything here is a pure function of its inputs except
:func:`fwht_inplace`, which overwrites its argument.
"""
from typing import NamedTuple

import numpy as np
from scipy.linalg import qr as _pivoted_qr
from scipy.linalg import solve_triangular

from .errors import NotPowerOfTwo, RankDeficient, SingularUpdate, ZeroMatrix

__all__ = [
    "ThinQR",
    "qr_thin",
    "solve_least_squares",
    "sherman_morrison_inverse_update",
    "fwht_inplace",
    "fwht",
    "spectral_norm",
    "stable_rank",
    "range_basis",
    "next_power_of_two",
]

RANK_TOL = 1e-12


class ThinQR(NamedTuple):
    q: np.ndarray
    r: np.ndarray


def _as_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    return a


def qr_thin(a):
    """Householder thin QR with a positive diagonal on ``R``.

    Parameters
    ----------
    a : (N, d) array_like
        Tall matrix, ``N >= d``.

    Returns
    -------
    ThinQR
        ``q`` is (N, d) with orthonormal columns and ``r`` is (d, d) upper
        triangular with ``r[j, j] >= 0``.

    Raises
    ------
    RankDeficient
        If some ``|r[j, j]| < 1e-12 * ||a||_F``.
    """
    a = _as_matrix(a)
    n_rows, n_cols = a.shape
    if n_rows < n_cols:
        raise RankDeficient(f"need rows >= cols, got shape {a.shape}")
    fro = np.linalg.norm(a)
    if fro == 0.0:
        raise RankDeficient("zero matrix has no column rank")
    q, r = np.linalg.qr(a, mode="reduced")
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    q = q * signs
    r = r * signs[:, None]
    if np.any(np.abs(np.diag(r)) < RANK_TOL * fro):
        raise RankDeficient("matrix is numerically rank deficient")
    return ThinQR(q, r)


def solve_least_squares(a, b):
    """Return ``argmin_w ||a w - b||^2`` through a thin QR of ``a``.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    q, r = qr_thin(a)
    return solve_triangular(r, q.T @ np.asarray(b, dtype=float))


def sherman_morrison_inverse_update(ainv, u, v):
    """Inverse of ``A + u v^T`` given ``ainv = A^{-1}``.

    Raises
    ------
    SingularUpdate
        If ``|1 + v^T A^{-1} u| < 1e-12``.
    """
    ainv = _as_matrix(ainv)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if ainv.shape[0] != ainv.shape[1]:
        raise ValueError("ainv must be square")
    ainv_u = ainv @ u
    v_ainv = v @ ainv
    denom = 1.0 + v @ ainv_u
    if abs(denom) < 1e-12:
        raise SingularUpdate(f"1 + v^T A^-1 u = {denom:g} is numerically zero")
    return ainv - np.outer(ainv_u, v_ainv) / denom


def next_power_of_two(n):
    return 1 << (int(n) - 1).bit_length() if n > 1 else 1


def fwht_inplace(x):
    """Unnormalized Walsh-Hadamard transform along axis 0, in place.

    ``x`` must be a C-contiguous float array whose first axis has a power of
    two length; trailing axes are transformed independently. Applying the
    transform twice multiplies by ``len(x)``. Returns ``x``.
    """
    n = x.shape[0]
    if n < 1 or n & (n - 1):
        raise NotPowerOfTwo(f"length {n} is not a power of two")
    if not x.flags.c_contiguous:
        raise ValueError("fwht_inplace needs a C-contiguous array")
    h = 1
    while h < n:
        blocks = x.reshape(n // (2 * h), 2, h, -1)
        top = blocks[:, 0].copy()
        blocks[:, 0] += blocks[:, 1]
        blocks[:, 1] *= -1.0
        blocks[:, 1] += top
        h *= 2
    return x


def fwht(x):
    """Out-of-place variant of :func:`fwht_inplace`."""
    return fwht_inplace(np.array(x, dtype=float, order="C", copy=True))


def spectral_norm(a, tol=1e-8, max_iter=1000):
    """Largest singular value of ``a`` by power iteration on the Gram matrix.

    Stops once the Rayleigh quotient changes by less than ``tol`` relative,
    or after ``max_iter`` iterations.
    """
    a = _as_matrix(a)
    gram = a.T @ a if a.shape[0] >= a.shape[1] else a @ a.T
    # fixed start vector keeps the result deterministic
    v = np.random.default_rng(0x5EED).standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = gram @ v
        new_est = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(new_est - est) <= tol * abs(new_est):
            est = new_est
            break
        est = new_est
    return float(np.sqrt(max(est, 0.0)))


def stable_rank(a):
    """``||a||_F^2 / ||a||_2^2``, a robust surrogate for the rank."""
    a = _as_matrix(a)
    fro2 = float(np.sum(a * a))
    if fro2 == 0.0:
        raise ZeroMatrix("stable rank of a zero matrix is undefined")
    return fro2 / spectral_norm(a) ** 2


def range_basis(x, rtol=1e-12):
    """Orthonormal basis for the column span of ``x`` (rank revealing).

    Uses column-pivoted QR and drops directions whose pivot falls below
    ``rtol`` times the largest one. A zero matrix yields an empty basis.
    """
    x = _as_matrix(x)
    if x.size == 0 or not np.any(x):
        return np.zeros((x.shape[0], 0))
    q, r, _ = _pivoted_qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rtol * diag[0]))
    return q[:, :rank]
