"""Monte Carlo sweeps, diagnostics runs, configuration files and SVG plots.

Configuration files are flat ``key = value`` text. Blank lines and anything
after ``#`` are ignored; keys are case-insensitive; list values are
comma-separated. See ``CONFIG_KEYS`` for the accepted keys and README for
the grammar.
"""
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .data import Dataset, SweepResult, gen_synthetic, load_libsvm
from .diagnostics import (
    TailReport,
    hat_matrix_expectation_check,
    hw_tail_compare,
    sketch_leverage_uniformity,
    subspace_distortion,
    whitener_for,
)
from .errors import ConfigError, DegenerateDataset, EmptyResults, RankDeficient
from .estimators import (
    ConstrainedProblem,
    RegressionProblem,
    constrained_sketch_solve,
    l1_constrained_least_squares,
    ols_error_law,
    randomized_svd_error,
    sketch_and_solve_ols,
    statdim_inverse,
)
from .linalg import next_power_of_two
from .sketches import Family, SketchSpec, apply_sketch, sketch_row_sampler

__all__ = [
    "Mode",
    "OperatorTemplate",
    "ExperimentConfig",
    "CONFIG_KEYS",
    "parse_config",
    "default_n_grid",
    "trial_seed",
    "run_ols_sweep",
    "run_lasso_sweep",
    "run_svd_sweep",
    "run_sweep",
    "run_diagnostics",
    "write_diagnostics_csv",
    "emit_svg_plot",
    "format_meta",
]


class Mode(str, enum.Enum):
    OLS = "ols"
    LASSO = "lasso"
    SVD = "svd"
    DIAGNOSTICS = "diagnostics"


@dataclass(frozen=True)
class OperatorTemplate:
    """A sketch family plus its size-independent options."""

    family: Family
    k: Optional[int] = None
    dense: bool = False

    @classmethod
    def parse(cls, text):
        # "less", "less:k=5", "less:dense"
        name, _, opts = text.strip().partition(":")
        k, dense = None, False
        for opt in filter(None, (o.strip() for o in opts.split(";"))):
            if opt == "dense":
                dense = True
            elif opt.startswith("k="):
                k = int(opt[2:])
            else:
                raise ValueError(f"unknown operator option {opt!r}")
        return cls(Family.parse(name), k, dense)

    @property
    def label(self):
        if self.k is not None:
            return f"{self.family.value}(k={self.k})"
        if self.dense:
            return f"{self.family.value}(dense)"
        return self.family.value

    def spec(self, n, seed):
        return SketchSpec(self.family, n, k=self.k, seed=seed, dense=self.dense)


@dataclass
class ExperimentConfig:
    mode: Mode = Mode.OLS
    dataset: str = "synthetic"
    synthetic_n_rows: int = 2000
    synthetic_d: int = 10
    synthetic_coherence: str = "low"
    synthetic_noise: float = 1.0
    synthetic_seed: int = 0
    expected_dim: Optional[int] = None
    standardize: bool = True
    operators: List[OperatorTemplate] = field(
        default_factory=lambda: [OperatorTemplate(Family.GAUSSIAN), OperatorTemplate(Family.LESS)]
    )
    n_grid: List[int] = field(default_factory=list)
    trials: int = 1000
    master_seed: int = 0
    output_dir: str = "results"
    workers: int = 1
    radius: Optional[float] = None
    tol: float = 1e-8

    def load_dataset(self) -> Dataset:
        if self.dataset == "synthetic":
            return gen_synthetic(
                self.synthetic_n_rows, self.synthetic_d, self.synthetic_coherence,
                self.synthetic_noise, self.synthetic_seed,
            )
        return load_libsvm(self.dataset, self.expected_dim, self.standardize)

    def grid_for(self, d, n_rows):
        grid = list(self.n_grid) or default_n_grid(d, self.mode)
        if self.mode is Mode.OLS:
            bad = [n for n in grid if n < d + 2]
            if bad:
                raise ConfigError(f"n_grid values {bad} are below d + 2 = {d + 2}")
        if self.mode is Mode.SVD:
            bad = [n for n in grid if not 0 < n < d]
            if bad:
                raise ConfigError(f"svd sketch sizes {bad} must lie in (0, d = {d})")
        for op in self.operators:
            if op.family is Family.SRHT and max(grid) > next_power_of_two(n_rows):
                raise ConfigError("SRHT sketch size exceeds the padded row count")
        return grid

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.operators:
            raise ConfigError("no operators configured")
        if self.mode is Mode.DIAGNOSTICS and self.trials < 1000:
            raise ConfigError("diagnostics need trials >= 1000")
        return self


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _optional(conv):
    return lambda text: conv(text) if text.strip() else None


CONFIG_KEYS = {
    "mode": ("mode", Mode),
    "dataset": ("dataset", str),
    "synthetic.n_rows": ("synthetic_n_rows", int),
    "synthetic.d": ("synthetic_d", int),
    "synthetic.coherence": ("synthetic_coherence", str),
    "synthetic.noise": ("synthetic_noise", float),
    "synthetic.seed": ("synthetic_seed", int),
    "expected_dim": ("expected_dim", _optional(int)),
    "standardize": ("standardize", _bool),
    "operators": ("operators", lambda t: [OperatorTemplate.parse(x) for x in t.split(",") if x.strip()]),
    "n_grid": ("n_grid", _int_list),
    "trials": ("trials", int),
    "seed": ("master_seed", int),
    "out": ("output_dir", str),
    "workers": ("workers", int),
    "radius": ("radius", _optional(float)),
    "tol": ("tol", float),
}


def parse_config(text, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Parse flat ``key = value`` text into an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        On unknown keys, missing ``=``, or values that fail to convert.
    """
    cfg = replace(base) if base is not None else ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        key = key.strip().lower()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, conv = CONFIG_KEYS[key]
        try:
            setattr(cfg, attr, conv(value.strip()))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return cfg.validate()


def default_n_grid(d, mode=Mode.OLS):
    """Eight log-spaced sketch sizes in ``[2d, 50d]`` (``[1, d/2]`` for SVD)."""
    if mode is Mode.SVD:
        lo, hi = 1, max(1, d // 2)
    else:
        lo, hi = max(2 * d, d + 2), 50 * d
    grid = np.unique(np.round(np.geomspace(lo, hi, 8)).astype(int))
    return [int(n) for n in grid]


def trial_seed(master_seed, op_index, n_index, trial_index):
    """Seed for one Monte Carlo cell entry; hashed by ``SeedSequence``."""
    return (int(master_seed), int(op_index), int(n_index), int(trial_index))


def _summarize(label, n, values, formula):
    values = np.asarray(values, dtype=float)
    good = values[np.isfinite(values)]
    degenerate = values.size - good.size
    if good.size:
        mean = math.fsum(good) / good.size
    else:
        mean = math.nan
    if good.size >= 2:
        var = math.fsum((good - mean) ** 2) / (good.size - 1)
        stderr = math.sqrt(var / good.size)
    else:
        stderr = 0.0
    return SweepResult(label, int(n), int(values.size), mean, stderr, formula, int(degenerate))


def _map_trials(fn, count, workers):
    if workers <= 1:
        return [fn(t) for t in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _sweep(cfg, dataset, trial_value, formula_for, grid):
    results = []
    for i, op in enumerate(cfg.operators):
        for j, n in enumerate(grid):
            def one(t, op=op, n=n, i=i, j=j):
                return trial_value(op.spec(n, trial_seed(cfg.master_seed, i, j, t)))

            values = _map_trials(one, cfg.trials, cfg.workers)
            results.append(_summarize(op.label, n, values, formula_for(n)))
    return results


def _problem(cfg, dataset):
    dataset = dataset if dataset is not None else cfg.load_dataset()
    p = RegressionProblem.from_data(dataset.a, dataset.b)
    if p.degenerate:
        raise DegenerateDataset(f"{dataset.name}: optimal loss is zero")
    return dataset, p


def run_ols_sweep(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> List[SweepResult]:
    """Normalized sketch-and-solve error for every (operator, n) cell.

    Trials whose sketch stays rank deficient after the allowed redraws are
    counted in ``degenerate_count`` and left out of the mean.
    """
    dataset, p = _problem(cfg, dataset)

    def value(spec):
        try:
            return sketch_and_solve_ols(p, spec).normalized_error
        except RankDeficient:
            return math.nan

    grid = cfg.grid_for(p.d, p.n_rows)
    return _sweep(cfg, dataset, value, lambda n: ols_error_law(p.d, n), grid)


def run_lasso_sweep(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> List[SweepResult]:
    """Like :func:`run_ols_sweep` for the l1-constrained problem.

    The reference optimum is the full-data constrained solution from the
    same solver. ``radius`` defaults to half the l1 norm of the unconstrained
    optimum. The ``gaussian_formula`` column holds ``d/(n-d-1)`` (the
    unconstrained law, an upper reference) or NaN when ``n < d + 2``.
    """
    dataset, p = _problem(cfg, dataset)
    radius = cfg.radius if cfg.radius is not None else 0.5 * float(np.abs(p.w_star).sum())
    cp = ConstrainedProblem(p, radius)
    w_full = l1_constrained_least_squares(p.a, p.b, radius, cfg.tol)
    loss_full = p.loss(w_full)

    def value(spec):
        try:
            w = constrained_sketch_solve(cp, spec, cfg.tol)
        except RankDeficient:
            return math.nan
        return (p.loss(w) - loss_full) / loss_full

    def formula(n):
        return ols_error_law(p.d, n) if n >= p.d + 2 else math.nan

    return _sweep(cfg, dataset, value, formula, cfg.grid_for(p.d, p.n_rows))


def run_svd_sweep(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> List[SweepResult]:
    """Randomized SVD residual ``||A - A P||_F^2 / ||A||_F^2`` per cell.

    ``gaussian_formula`` is the implicit prediction ``n lambda_n / ||A||_F^2``
    with ``lambda_n`` the inverse statistical dimension at ``n``.
    """
    dataset = dataset if dataset is not None else cfg.load_dataset()
    a = dataset.a
    fro2 = float(np.sum(a * a))
    profile = None
    if any(op.family is Family.LESS for op in cfg.operators):
        from .leverage import exact_leverage_scores

        profile = exact_leverage_scores(a)

    def value(spec):
        return randomized_svd_error(a, apply_sketch(spec, a, profile)) / fro2

    def formula(n):
        return n * statdim_inverse(a, n) / fro2

    return _sweep(cfg, dataset, value, formula, cfg.grid_for(a.shape[1], a.shape[0]))


def run_sweep(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> List[SweepResult]:
    runners = {Mode.OLS: run_ols_sweep, Mode.LASSO: run_lasso_sweep, Mode.SVD: run_svd_sweep}
    if cfg.mode not in runners:
        raise ConfigError(f"mode {cfg.mode.value!r} does not produce a sweep")
    return runners[cfg.mode](cfg, dataset)


def _test_matrices(d, seed):
    rng = np.random.default_rng([int(seed), 0xB0B])
    g = rng.standard_normal((d, d))
    v = rng.standard_normal(d)
    return {
        "identity": np.eye(d),
        "random_psd": g @ g.T / d,
        "rank_one": np.outer(v, v) / (v @ v),
    }


def _levels_for(count):
    return (0.5, 0.9, 0.99, 0.999) if count >= 1000 else (0.5, 0.9)


def run_diagnostics(cfg: ExperimentConfig, dataset: Optional[Dataset] = None) -> List[TailReport]:
    """Gaussianization diagnostics for every configured operator.

    Produces, per operator: Hanson-Wright tail reports for three test
    matrices (identity, random psd, rank one) against Gaussian rows; the
    distribution over seeds of sketch-leverage uniformity and of subspace
    distortion at the largest grid size, against the Gaussian embedding; and
    the hat-matrix expectation deviation at the smallest admissible size.
    """
    cfg.validate()
    dataset = dataset if dataset is not None else cfg.load_dataset()
    p = RegressionProblem.from_data(dataset.a, dataset.b)
    d = p.d
    grid = [n for n in cfg.grid_for(d, p.n_rows) if n > d + 1] or [2 * d + 2]
    n_big, n_small = max(grid), min(grid)
    whitener = whitener_for(p.a)
    mats = _test_matrices(d, cfg.master_seed)
    seeds = min(cfg.trials, 200)
    levels = _levels_for(seeds)

    def per_seed(template, fn, n, tag):
        out = []
        for t in range(seeds):
            spec = template.spec(n, (cfg.master_seed, tag, t))
            try:
                out.append(fn(apply_sketch(spec, p.a, p.leverage)))
            except RankDeficient:
                out.append(math.inf)
        return np.array(out)

    def quant(values):
        return {float(lv): float(q) for lv, q in zip(levels, np.quantile(values, levels))}

    gauss = OperatorTemplate(Family.GAUSSIAN)
    ref_unif = quant(per_seed(gauss, sketch_leverage_uniformity, n_big, 1))
    ref_dist = quant(per_seed(gauss, lambda sa: subspace_distortion(sa, p.a), n_big, 2))
    ref_hat = hat_matrix_expectation_check(p, gauss.spec(n_small, 0), cfg.trials, (cfg.master_seed, 3))

    reports = []
    for i, op in enumerate(cfg.operators):
        sampler = sketch_row_sampler(op.family, p.a, k=op.k, profile=p.leverage)
        for name, bmat in mats.items():
            rep = hw_tail_compare(sampler, whitener, bmat, cfg.trials, (cfg.master_seed, 10 + i),
                                  name=f"{op.label}:hanson_wright[{name}]")
            reports.append(rep)
        reports.append(TailReport(
            f"{op.label}:leverage_uniformity[n={n_big}]",
            quant(per_seed(op, sketch_leverage_uniformity, n_big, 1)), seeds, ref_unif,
        ))
        reports.append(TailReport(
            f"{op.label}:subspace_distortion[n={n_big}]",
            quant(per_seed(op, lambda sa: subspace_distortion(sa, p.a), n_big, 2)), seeds, ref_dist,
        ))
        dev = hat_matrix_expectation_check(p, op.spec(n_small, 0), cfg.trials, (cfg.master_seed, 3))
        reports.append(TailReport(
            f"{op.label}:hat_matrix_max_ratio_dev[n={n_small}]", {1.0: dev}, cfg.trials, {1.0: ref_hat},
        ))
    return reports


def write_diagnostics_csv(reports: Sequence[TailReport], sink):
    lines = ["statistic,trials,level,value,reference"]
    for rep in reports:
        for level in sorted(rep.quantiles):
            ref = rep.reference_quantiles.get(level, math.nan)
            lines.append(f"{rep.statistic_name},{rep.trials},{level:g},{rep.quantiles[level]:.10g},{ref:.10g}")
    payload = "\n".join(lines) + "\n"
    if isinstance(sink, io.TextIOBase):
        sink.write(payload)
    else:
        sink.write(payload.encode("utf-8"))


# ---------------------------------------------------------------- plotting

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2")
_W, _H = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 150, 30, 50


def _c(x):
    return f"{x:.3f}"


def emit_svg_plot(results: Sequence[SweepResult], sink, title="normalized excess loss vs sketch size",
                  reference_label="d/(n-d-1)"):
    """Render sweep results as a standalone SVG.

    Log-scale y axis, one polyline with markers per operator, a shaded
    +-1 standard error band, and the ``gaussian_formula`` column as a dashed
    reference curve. The reference polyline carries its exact values in a
    ``data-values`` attribute (``n:value`` pairs, 10 significant digits).
    """
    results = list(results)
    if not results:
        raise EmptyResults("nothing to plot")
    ordered = sorted(results, key=lambda r: (r.operator, r.n))
    operators = sorted({r.operator for r in ordered})
    ns = sorted({r.n for r in ordered})
    reference = {}
    for r in ordered:
        if r.n not in reference and math.isfinite(r.gaussian_formula) and r.gaussian_formula > 0:
            reference[r.n] = r.gaussian_formula

    ys = [v for r in ordered for v in (r.mean_norm_err, r.mean_norm_err - r.stderr,
                                       r.mean_norm_err + r.stderr) if math.isfinite(v) and v > 0]
    ys += list(reference.values())
    if not ys:
        ys = [1.0]
    lo = math.floor(math.log10(min(ys)))
    hi = math.ceil(math.log10(max(ys)))
    if hi == lo:
        hi = lo + 1
    x_lo, x_hi = ns[0], ns[-1]
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    plot_w = _W - _LEFT - _RIGHT
    plot_h = _H - _TOP - _BOTTOM

    def px(n):
        return _LEFT + (n - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        v = max(v, 10.0 ** lo)
        return _TOP + (hi - math.log10(v)) / (hi - lo) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_LEFT}" y="18" font-size="13">{title}</text>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
    ]
    for e in range(lo, hi + 1):
        y = py(10.0 ** e)
        out.append(f'<line x1="{_c(_LEFT)}" y1="{_c(y)}" x2="{_c(_LEFT + plot_w)}" y2="{_c(y)}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{_c(_LEFT - 6)}" y="{_c(y + 4)}" text-anchor="end">1e{e}</text>')
    for n in ns:
        x = px(n)
        out.append(f'<line x1="{_c(x)}" y1="{_c(_TOP + plot_h)}" x2="{_c(x)}" y2="{_c(_TOP + plot_h + 4)}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{_c(x)}" y="{_c(_TOP + plot_h + 16)}" text-anchor="middle">{n}</text>')
    out.append(f'<text x="{_c(_LEFT + plot_w / 2)}" y="{_H - 12}" text-anchor="middle">sketch size n</text>')

    if reference:
        pts = sorted(reference.items())
        coords = " ".join(f"{_c(px(n))},{_c(py(v))}" for n, v in pts)
        values = ";".join(f"{n}:{v:.10g}" for n, v in pts)
        out.append(f'<polyline class="reference" points="{coords}" data-values="{values}" '
                   f'fill="none" stroke="black" stroke-dasharray="6,4"/>')

    for idx, op in enumerate(operators):
        color = _PALETTE[idx % len(_PALETTE)]
        rows = [r for r in ordered if r.operator == op and math.isfinite(r.mean_norm_err)
                and r.mean_norm_err > 0]
        if not rows:
            continue
        upper = [f"{_c(px(r.n))},{_c(py(r.mean_norm_err + r.stderr))}" for r in rows]
        lower = [f"{_c(px(r.n))},{_c(py(r.mean_norm_err - r.stderr))}" for r in reversed(rows)]
        out.append(f'<polygon class="band" data-operator="{op}" points="{" ".join(upper + lower)}" '
                   f'fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_c(px(r.n))},{_c(py(r.mean_norm_err))}" for r in rows)
        out.append(f'<polyline class="series" data-operator="{op}" points="{line}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        for r in rows:
            out.append(f'<circle class="marker" data-operator="{op}" data-n="{r.n}" '
                       f'data-value="{r.mean_norm_err:.10g}" cx="{_c(px(r.n))}" '
                       f'cy="{_c(py(r.mean_norm_err))}" r="3" fill="{color}"/>')
        ly = _TOP + 14 + 16 * idx
        out.append(f'<line x1="{_W - _RIGHT + 12}" y1="{ly}" x2="{_W - _RIGHT + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _RIGHT + 38}" y="{ly + 4}">{op}</text>')
    if reference:
        ly = _TOP + 14 + 16 * len(operators)
        out.append(f'<line x1="{_W - _RIGHT + 12}" y1="{ly}" x2="{_W - _RIGHT + 32}" y2="{ly}" '
                   f'stroke="black" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{_W - _RIGHT + 38}" y="{ly + 4}">{reference_label}</text>')
    out.append("</svg>")
    payload = "\n".join(out) + "\n"
    if isinstance(sink, io.TextIOBase):
        sink.write(payload)
    else:
        sink.write(payload.encode("utf-8"))


def format_meta(cfg: ExperimentConfig, command=""):
    """Config echo, seed and package version for ``meta.txt``."""
    ops = ", ".join(op.label.replace("(k=", ":k=").replace("(dense)", ":dense").rstrip(")")
                    for op in cfg.operators)
    lines = [
        f"# lessketch {__version__}",
        f"# command: {command}" if command else "# command: (library call)",
        f"mode = {cfg.mode.value}",
        f"dataset = {cfg.dataset}",
        f"synthetic.n_rows = {cfg.synthetic_n_rows}",
        f"synthetic.d = {cfg.synthetic_d}",
        f"synthetic.coherence = {cfg.synthetic_coherence}",
        f"synthetic.noise = {cfg.synthetic_noise!r}",
        f"synthetic.seed = {cfg.synthetic_seed}",
        f"expected_dim = {'' if cfg.expected_dim is None else cfg.expected_dim}",
        f"standardize = {str(cfg.standardize).lower()}",
        f"operators = {ops}",
        f"n_grid = {', '.join(str(n) for n in cfg.n_grid)}",
        f"trials = {cfg.trials}",
        f"seed = {cfg.master_seed}",
        f"out = {cfg.output_dir}",
        f"workers = {cfg.workers}",
        f"radius = {'' if cfg.radius is None else repr(cfg.radius)}",
        f"tol = {cfg.tol!r}",
    ]
    return "\n".join(lines) + "\n"
