"""Sketching an l1-constrained regression.

With a 3-sparse truth in d = 40 dimensions, solving the LESS-sketched
problem over the same l1 ball gets within a few percent of the full-data
constrained loss from only n = 400 of 4000 rows' worth of sketch.
"""
import numpy as np

from lessketch import ConstrainedProblem, RegressionProblem, SketchSpec
from lessketch import constrained_sketch_solve, l1_constrained_least_squares

rng = np.random.default_rng(5)
a = rng.standard_normal((4000, 40))
w0 = np.zeros(40)
w0[:3] = [3.0, -2.0, 1.5]
b = a @ w0 + rng.standard_normal(4000)
p = RegressionProblem.from_data(a, b)
radius = np.abs(w0).sum()

full = l1_constrained_least_squares(a, b, radius)
print(f"full-data constrained loss {p.loss(full):.1f}, support {np.flatnonzero(np.abs(full) > 1e-3)}")
cp = ConstrainedProblem(p, radius)
for n in (100, 200, 400, 800):
    ratios = [p.loss(constrained_sketch_solve(cp, SketchSpec("less", n, seed=(n, s)))) / p.loss(full)
              for s in range(20)]
    print(f"n={n:4d}  loss ratio median {np.median(ratios):.3f}  max {np.max(ratios):.3f}")
