"""Randomized sketching with LESS embeddings, plus a Monte Carlo benchmark harness."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import (
    fwht,
    fwht_inplace,
    next_power_of_two,
    qr_thin,
    range_basis,
    sherman_morrison_inverse_update,
    solve_least_squares,
    spectral_norm,
    stable_rank,
)
from .leverage import (
    LeverageProfile,
    approx_leverage_scores,
    exact_leverage_scores,
    mixture_probabilities,
)
from .sketches import (
    Family,
    SketchSpec,
    SketchedPair,
    apply_sketch,
    gaussianized_sample,
    sample_hard_example,
    sketch,
    sketch_gaussian,
    sketch_less,
    sketch_less_uniform,
    sketch_row_sampler,
    sketch_srht,
    sketch_uniform_rows,
)
from .estimators import (
    ConstrainedProblem,
    RegressionProblem,
    constrained_sketch_solve,
    gaussian_width_mc,
    l1_ball_project,
    l1_constrained_least_squares,
    loo_cv_loss,
    ols_error_law,
    randomized_svd_error,
    restricted_condition_small,
    sketch_and_solve_ols,
    statdim,
    statdim_inverse,
)
from .diagnostics import (
    TailReport,
    hanson_wright_stat,
    hat_matrix_expectation_check,
    hw_tail_compare,
    jl_distortion,
    psi2_estimate,
    sketch_leverage_uniformity,
    subspace_distortion,
)
from .data import Dataset, SweepResult, gen_synthetic, load_libsvm, parse_libsvm, read_csv, to_libsvm, write_csv
from .bench import ExperimentConfig, emit_svg_plot, parse_config, run_diagnostics, run_ols_sweep
