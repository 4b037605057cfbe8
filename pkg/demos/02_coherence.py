"""Why leverage scores matter: a high-coherence design.

A handful of rows carry almost all of the leverage of some columns. Uniform
row sampling usually misses them and the sketched solution is poor; LESS
samples them preferentially and stays on the Gaussian curve.
"""
import numpy as np

from lessketch import RegressionProblem, SketchSpec, exact_leverage_scores, gen_synthetic, ols_error_law
from lessketch import sketch_and_solve_ols

ds = gen_synthetic(2000, 10, "high", noise=1.0, seed=1)
prof = exact_leverage_scores(ds.a)
print(f"coherence {prof.coherence:.3f}; top scores {np.sort(prof.scores)[-6:].round(3)}")

p = RegressionProblem.from_data(ds.a, ds.b)
n = 40
print(f"n={n}, Gaussian law {ols_error_law(10, n):.3f}")
for family in ("less", "lessuniform", "uniform", "srht"):
    errs = [sketch_and_solve_ols(p, SketchSpec(family, n, seed=(7, t))).normalized_error for t in range(400)]
    print(f"  {family:12s} mean {np.mean(errs):8.3f}   median {np.median(errs):8.3f}")
