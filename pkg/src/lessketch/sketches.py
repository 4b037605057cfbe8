"""Sketch operators.

Every operator draws an ``n x N`` random matrix ``S`` normalized so that
``E[S^T S] = I`` and applies it to an ``N x m`` matrix without ever forming
``S``. The five families are

* ``gaussian``     -- i.i.d. ``N(0, 1/n)`` entries;
* ``less``         -- leverage score sparsified rows: each row of ``sqrt(n) S``
  is ``sum_j r_j e_{I_j} / sqrt(k p_{I_j})`` with ``I_j ~ p`` drawn with
  replacement and a fresh Rademacher ``r_j`` per draw;
* ``lessuniform``  -- the same with ``p`` uniform, so no leverage scores are
  needed;
* ``srht``         -- random signs, Walsh-Hadamard transform and uniform row
  subsampling without replacement;
* ``uniform``      -- uniform row sampling with replacement.

Seeds are ints, tuples of ints (hashed through :class:`numpy.random.SeedSequence`)
or ready-made generators.
"""
import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidDistribution, SketchTooLarge
from .leverage import LeverageProfile
from .linalg import fwht_inplace, next_power_of_two

__all__ = [
    "Family",
    "SketchSpec",
    "SketchedPair",
    "make_rng",
    "apply_sketch",
    "sketch",
    "sketch_gaussian",
    "sketch_less",
    "sketch_less_uniform",
    "sketch_srht",
    "sketch_uniform_rows",
    "sample_sketch_rows",
    "sketch_row_sampler",
    "sample_hard_example",
    "gaussianized_sample",
]

# upper bound on temporaries (in float64 entries) built per chunk
_CHUNK_ENTRIES = 1 << 22


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LESS = "less"
    LESS_UNIFORM = "lessuniform"
    SRHT = "srht"
    UNIFORM_ROWS = "uniform"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "").replace("-", "")
        aliases = {"uniformrows": "uniform", "lessuni": "lessuniform"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown sketch family {name!r}")

    @property
    def sparse(self):
        return self in (Family.LESS, Family.LESS_UNIFORM)


@dataclass(frozen=True)
class SketchSpec:
    """Which operator to draw and how large.

    ``k`` is the number of nonzeros per row for the LESS families; ``None``
    means ``k = d``. With ``dense=True`` the LESS families use
    ``k = ceil(d log(n d / delta))`` instead.
    """

    family: Family
    n: int
    k: Optional[int] = None
    seed: object = 0
    dense: bool = False
    delta: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if self.n < 1:
            raise ValueError(f"sketch size must be >= 1, got {self.n}")
        if self.k is not None and self.k < 1:
            raise ValueError(f"nonzeros per row must be >= 1, got {self.k}")

    def resolve_k(self, d, n_rows=None):
        if self.k is not None:
            k = self.k
        elif self.dense:
            k = math.ceil(d * math.log(self.n * d / self.delta))
        else:
            k = d
        if n_rows is not None and k > n_rows:
            raise ValueError(f"k = {k} exceeds the number of data rows {n_rows}")
        return int(k)

    def with_seed(self, seed):
        return replace(self, seed=seed)


class SketchedPair(NamedTuple):
    sa: np.ndarray
    sb: np.ndarray


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        seed = np.random.SeedSequence([int(s) for s in seed])
    return np.random.default_rng(seed)


def _rademacher(rng, size):
    return rng.integers(0, 2, size=size).astype(float) * 2.0 - 1.0


def _check_probs(probs, n_rows):
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (n_rows,):
        raise InvalidDistribution(f"expected {n_rows} probabilities, got shape {probs.shape}")
    if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
        raise InvalidDistribution("probabilities must be finite and positive")
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise InvalidDistribution(f"probabilities sum to {total!r}, not 1")
    return probs


def _gaussian(m, n, rng):
    n_rows = m.shape[0]
    out = np.zeros((n, m.shape[1]))
    step = max(1, _CHUNK_ENTRIES // n)
    for start in range(0, n_rows, step):
        block = m[start:start + step]
        out += rng.standard_normal((n, block.shape[0])) @ block
    return out / math.sqrt(n)


def _sparse_rows(m, idx, weights):
    n, k = idx.shape
    out = np.empty((n, m.shape[1]))
    step = max(1, _CHUNK_ENTRIES // max(1, k * m.shape[1]))
    for start in range(0, n, step):
        sl = slice(start, start + step)
        out[sl] = np.einsum("ij,ijm->im", weights[sl], m[idx[sl]])
    return out


def _less(m, n, k, probs, rng):
    n_rows = m.shape[0]
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random((n, k)) * cdf[-1], side="right")
    np.minimum(idx, n_rows - 1, out=idx)
    signs = _rademacher(rng, (n, k))
    weights = signs / np.sqrt(k * probs[idx] * n)
    return _sparse_rows(m, idx, weights)


def _less_uniform(m, n, k, rng):
    n_rows = m.shape[0]
    idx = rng.integers(0, n_rows, size=(n, k))
    weights = _rademacher(rng, (n, k)) * math.sqrt(n_rows / (k * n))
    return _sparse_rows(m, idx, weights)


def _srht(m, n, rng, signs=None):
    n_rows = m.shape[0]
    padded = next_power_of_two(n_rows)
    if n > padded:
        raise SketchTooLarge(f"SRHT size {n} exceeds padded row count {padded}")
    if signs is None:
        signs = _rademacher(rng, n_rows)
    work = np.zeros((padded, m.shape[1]))
    work[:n_rows] = m * np.asarray(signs, dtype=float)[:, None]
    fwht_inplace(work)
    keep = np.sort(rng.choice(padded, size=n, replace=False))
    return work[keep] / math.sqrt(n)


def _uniform_rows(m, n, rng):
    n_rows = m.shape[0]
    idx = rng.integers(0, n_rows, size=n)
    return m[idx] * math.sqrt(n_rows / n)


def apply_sketch(spec, m, profile=None, *, d=None, srht_signs=None):
    """Apply the operator described by ``spec`` to the rows of ``m``.

    Parameters
    ----------
    spec : SketchSpec
    m : (N, c) array_like
        Matrix whose rows are mixed; a 1-D input is treated as one column.
    profile : LeverageProfile, optional
        Required for ``less``; ``profile.probs`` is the row distribution and
        ``profile.d`` the default nonzeros per row.
    d : int, optional
        Data dimension used for the default ``k = d`` when no profile is
        given; defaults to the column count of ``m``.
    srht_signs : (N,) array_like, optional
        Test hook that fixes the SRHT sign diagonal.

    Returns
    -------
    (n, c) ndarray (or (n,) for 1-D input)
    """
    m = np.asarray(m, dtype=float)
    vector = m.ndim == 1
    if vector:
        m = m[:, None]
    rng = make_rng(spec.seed)
    family = spec.family
    n_rows = m.shape[0]
    if family is Family.GAUSSIAN:
        out = _gaussian(m, spec.n, rng)
    elif family is Family.LESS:
        if profile is None:
            raise InvalidDistribution("LESS needs a leverage profile")
        probs = _check_probs(profile.probs, n_rows)
        out = _less(m, spec.n, spec.resolve_k(profile.d, n_rows), probs, rng)
    elif family is Family.LESS_UNIFORM:
        if d is None:
            d = profile.d if profile is not None else m.shape[1]
        out = _less_uniform(m, spec.n, spec.resolve_k(d, n_rows), rng)
    elif family is Family.SRHT:
        out = _srht(m, spec.n, rng, srht_signs)
    else:
        out = _uniform_rows(m, spec.n, rng)
    return out[:, 0] if vector else out


def sketch(spec, a, b, profile=None, **kwargs):
    """Sketch ``a`` and ``b`` with the same draw of ``S``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"a has {a.shape[0]} rows but b has length {b.shape[0]}")
    joint = apply_sketch(spec, np.column_stack([a, b]), profile, d=a.shape[1], **kwargs)
    return SketchedPair(joint[:, :-1], joint[:, -1])


def sketch_gaussian(a, b, n, seed=None):
    return sketch(SketchSpec(Family.GAUSSIAN, n, seed=seed), a, b)


def sketch_less(a, b, n, k, profile, seed=None):
    if not isinstance(profile, LeverageProfile):
        raise InvalidDistribution("profile must be a LeverageProfile")
    return sketch(SketchSpec(Family.LESS, n, k=k, seed=seed), a, b, profile)


def sketch_less_uniform(a, b, n, k, seed=None):
    return sketch(SketchSpec(Family.LESS_UNIFORM, n, k=k, seed=seed), a, b)


def sketch_srht(a, b, n, seed=None, *, signs=None):
    return sketch(SketchSpec(Family.SRHT, n, seed=seed), a, b, srht_signs=signs)


def sketch_uniform_rows(a, b, n, seed=None):
    return sketch(SketchSpec(Family.UNIFORM_ROWS, n, seed=seed), a, b)


def _hadamard_rows(rows, n_cols):
    # entries (-1)^popcount(j & i) of the unnormalized Hadamard matrix
    bits = np.bitwise_and(rows[:, None], np.arange(n_cols)[None, :])
    parity = np.zeros(bits.shape, dtype=np.int64)
    while np.any(bits):
        parity ^= bits & 1
        bits >>= 1
    return 1.0 - 2.0 * parity


def sample_sketch_rows(family, a, count, rng, k=None, profile=None):
    """Draw ``count`` independent rows of ``sqrt(n) S A``.

    Each returned row has second moment ``A^T A``; whitening by
    ``(A^T A)^{-1/2}`` makes it isotropic. For SRHT this is a single row of
    ``H D A`` with a fresh sign diagonal, i.e. the marginal law of one SRHT
    row.
    """
    family = Family.parse(family)
    a = np.asarray(a, dtype=float)
    n_rows, d = a.shape
    rng = make_rng(rng)
    if family is Family.GAUSSIAN:
        return rng.standard_normal((count, n_rows)) @ a
    if family is Family.UNIFORM_ROWS:
        return a[rng.integers(0, n_rows, size=count)] * math.sqrt(n_rows)
    if family is Family.SRHT:
        padded = next_power_of_two(n_rows)
        h = _hadamard_rows(rng.integers(0, padded, size=count), n_rows)
        signs = _rademacher(rng, (count, n_rows))
        return (h * signs) @ a
    k = int(k if k is not None else (profile.d if profile is not None else d))
    if family is Family.LESS:
        if profile is None:
            raise InvalidDistribution("LESS needs a leverage profile")
        return _less(a, count, k, _check_probs(profile.probs, n_rows), rng) * math.sqrt(count)
    return _less_uniform(a, count, k, rng) * math.sqrt(count)


def sketch_row_sampler(family, a, k=None, profile=None):
    """Return an oracle ``seed -> row of sqrt(n) S A`` for diagnostics."""

    def draw(seed):
        return sample_sketch_rows(family, a, 1, make_rng(seed), k=k, profile=profile)[0]

    draw.batch = lambda rng, count: sample_sketch_rows(family, a, count, rng, k=k, profile=profile)
    return draw


def sample_hard_example(m, d, n_samples, seed=None):
    """Sparse isotropic rows ``M * (t_1 b_1, ..., t_d b_d)``.

    ``t_j`` are Rademacher and ``b_j ~ Bernoulli(1/M^2)``, so every entry is
    ``0`` or ``+-M`` and ``E[x x^T] = I``. Larger ``M`` means sparser, heavier
    tailed rows.
    """
    if m < 1:
        raise ValueError(f"M must be >= 1, got {m}")
    rng = make_rng(seed)
    signs = _rademacher(rng, (n_samples, d))
    fires = rng.random((n_samples, d)) < 1.0 / (m * m)
    return m * signs * fires


def gaussianized_sample(x_rows, k, seed=None):
    """``(1/sqrt(k)) sum_{i<k} r_i x_i`` with fresh Rademacher ``r_i``."""
    x_rows = np.asarray(x_rows, dtype=float)
    if x_rows.shape[0] < k:
        raise ValueError(f"need at least {k} rows, got {x_rows.shape[0]}")
    r = _rademacher(make_rng(seed), k)
    return r @ x_rows[:k] / math.sqrt(k)
