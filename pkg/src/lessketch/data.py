"""Datasets: libsvm text, synthetic generators and sweep-result CSV files."""
import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import LibsvmIndexError, ParseError
from .leverage import exact_leverage_scores
from .sketches import make_rng

__all__ = [
    "Source",
    "Dataset",
    "SweepResult",
    "CSV_HEADER",
    "parse_libsvm",
    "to_libsvm",
    "load_libsvm",
    "standardize_columns",
    "gen_synthetic",
    "write_csv",
    "read_csv",
]

CSV_HEADER = "operator,n,trials,mean_norm_err,stderr,gaussian_formula,degenerate_count"


class Source(str, enum.Enum):
    FILE = "file"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``a`` (N x d) and response ``b``.

    Construction checks shapes and finiteness only; :meth:`check_regression`
    adds ``N >= d``, which experiments need but raw parsed text may not meet.
    """

    a: np.ndarray
    b: np.ndarray
    name: str
    source: Source
    standardized: bool = False

    def __post_init__(self):
        if self.a.ndim != 2 or min(self.a.shape) < 1:
            raise ValueError(f"need a nonempty 2-D design matrix, got shape {self.a.shape}")
        n_rows = self.a.shape[0]
        if self.b.shape != (n_rows,):
            raise ValueError(f"b has shape {self.b.shape}, expected ({n_rows},)")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("dataset contains NaN or Inf")

    def check_regression(self):
        n_rows, d = self.a.shape
        if n_rows < d:
            raise ValueError(f"{self.name}: need N >= d, got {n_rows} rows and {d} columns")
        return self

    @property
    def degenerate(self):
        """True when ``b`` is (numerically) in the column span of ``a``."""
        from .estimators import RegressionProblem

        return RegressionProblem.from_data(self.a, self.b).degenerate


@dataclass(frozen=True)
class SweepResult:
    """Monte Carlo summary for one (operator, sketch size) cell.

    ``trials`` counts every attempted trial; the mean and standard error use
    the ``trials - degenerate_count`` non-degenerate ones.
    """

    operator: str
    n: int
    trials: int
    mean_norm_err: float
    stderr: float
    gaussian_formula: float
    degenerate_count: int = 0

    @property
    def effective_trials(self):
        return self.trials - self.degenerate_count

    @property
    def stderr_defined(self):
        return self.effective_trials >= 2


def _lines(text):
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    if isinstance(text, str):
        return text.splitlines()
    return [ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in text]


def parse_libsvm(text, expected_dim: Optional[int] = None, name="libsvm"):
    """Parse libsvm regression text into a dense :class:`Dataset`.

    Each nonempty line is ``<label> <index>:<value> ...`` with 1-based,
    strictly increasing indices. Missing features are zero. ``text`` may be
    ``str``, ``bytes`` or an iterable of lines. Lines starting with ``#`` are
    skipped.

    Raises
    ------
    ParseError
        On a malformed token (message carries the line number).
    LibsvmIndexError
        On a nonpositive, repeated, decreasing or out-of-range index.
    """
    labels = []
    rows = []
    max_index = 0
    for lineno, raw in enumerate(_lines(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        feats = {}
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"bad feature token {tok!r}", lineno) from None
            if idx <= 0:
                raise LibsvmIndexError(f"nonpositive index {idx}", lineno)
            if idx <= prev:
                raise LibsvmIndexError(f"index {idx} does not increase after {prev}", lineno)
            if expected_dim is not None and idx > expected_dim:
                raise LibsvmIndexError(f"index {idx} exceeds dimension {expected_dim}", lineno)
            if not (math.isfinite(val) and math.isfinite(label)):
                raise ParseError("non-finite value", lineno)
            feats[idx - 1] = val
            prev = idx
        max_index = max(max_index, prev)
        labels.append(label)
        rows.append(feats)
    dim = expected_dim if expected_dim is not None else max_index
    a = np.zeros((len(rows), dim))
    for i, feats in enumerate(rows):
        for j, v in feats.items():
            a[i, j] = v
    return Dataset(a, np.array(labels, dtype=float), name, Source.FILE)


def to_libsvm(a, b):
    """Serialize to libsvm text, omitting zeros; values use ``repr`` so they round-trip."""
    a = np.asarray(a, dtype=float)
    out = io.StringIO()
    for row, label in zip(a, np.asarray(b, dtype=float)):
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(row) if v != 0.0)
        out.write(f"{float(label)!r} {feats}".rstrip() + "\n")
    return out.getvalue()


def standardize_columns(a):
    """Zero-mean, unit-variance columns; constant columns are only centered."""
    a = np.asarray(a, dtype=float)
    centered = a - a.mean(axis=0)
    std = centered.std(axis=0)
    std[std == 0] = 1.0
    return centered / std


def load_libsvm(path, expected_dim=None, standardize=True):
    """Read a libsvm file; columns are standardized unless told otherwise."""
    with open(path, "rb") as fh:
        ds = parse_libsvm(fh.read(), expected_dim, name=str(path))
    if standardize:
        ds = Dataset(standardize_columns(ds.a), ds.b, ds.name, Source.FILE, True)
    return ds.check_regression()


def gen_synthetic(n_rows, d, coherence="low", noise=1.0, seed=None):
    """Synthetic regression problem with controlled coherence.

    ``low``: i.i.d. standard normal rows. ``high``: the same, except that
    ``ceil(d/2)`` rows are replaced by heavy rows ``c * e_j`` on distinct
    axes, with ``c = 4 sqrt(N)`` so that each carries leverage close to one
    (at least 0.9 is checked). ``b = A w0 + noise * xi`` with ``w0`` and
    ``xi`` standard normal.
    """
    if n_rows < d:
        raise ValueError(f"need n_rows >= d, got {n_rows} < {d}")
    coherence = str(getattr(coherence, "value", coherence)).lower()
    if coherence not in ("low", "high"):
        raise ValueError(f"coherence must be 'low' or 'high', got {coherence!r}")
    rng = make_rng(seed)
    a = rng.standard_normal((n_rows, d))
    if coherence == "high":
        planted = math.ceil(d / 2)
        if planted > n_rows:
            raise ValueError("not enough rows to plant heavy rows")
        where = rng.choice(n_rows, size=planted, replace=False)
        a[where] = 0.0
        a[where, np.arange(planted)] = 4.0 * math.sqrt(n_rows)
    w0 = rng.standard_normal(d)
    b = a @ w0 + noise * rng.standard_normal(n_rows)
    if coherence == "high":
        coh = exact_leverage_scores(a).coherence
        if coh < 0.9:
            raise RuntimeError(f"high-coherence construction reached only {coh:.3f}")
    return Dataset(a, b, f"synthetic-{coherence}-{n_rows}x{d}", Source.SYNTHETIC)


def _fmt(x):
    return f"{x:.10g}"


def write_csv(results: List[SweepResult], sink):
    """Write sweep results as CSV, sorted by operator then ``n``.

    ``sink`` is a text or binary file object. Output bytes depend only on
    the results.
    """
    ordered = sorted(results, key=lambda r: (r.operator, r.n))
    lines = [CSV_HEADER]
    for r in ordered:
        lines.append(",".join([
            r.operator, str(int(r.n)), str(int(r.trials)), _fmt(r.mean_norm_err),
            _fmt(r.stderr), _fmt(r.gaussian_formula), str(int(r.degenerate_count)),
        ]))
    payload = "\n".join(lines) + "\n"
    if isinstance(sink, io.TextIOBase):
        sink.write(payload)
    else:
        sink.write(payload.encode("utf-8"))


def read_csv(source):
    """Inverse of :func:`write_csv`."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    reader = csv.DictReader(io.StringIO(source))
    if ",".join(reader.fieldnames or []) != CSV_HEADER:
        raise ParseError(f"unexpected CSV header {reader.fieldnames}")
    return [
        SweepResult(
            row["operator"], int(row["n"]), int(row["trials"]), float(row["mean_norm_err"]),
            float(row["stderr"]), float(row["gaussian_formula"]), int(row["degenerate_count"]),
        )
        for row in reader
    ]
