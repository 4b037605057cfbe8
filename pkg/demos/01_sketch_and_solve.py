"""Sketch-and-solve least squares: how far is the sketched solution from the optimum?

For a Gaussian sketch the expected normalized excess loss is d/(n-d-1)
exactly. Here we check that empirically and see that LESS, which touches only
d rows of A per sketch row, lands on the same curve.
"""
import numpy as np

from lessketch import RegressionProblem, SketchSpec, gen_synthetic, ols_error_law, sketch_and_solve_ols

ds = gen_synthetic(2000, 10, "low", noise=1.0, seed=0)
p = RegressionProblem.from_data(ds.a, ds.b)
print(f"A is {p.n_rows} x {p.d}, optimal loss {p.loss_star:.2f}")

trials = 300
for n in (25, 40, 80, 160):
    row = [f"n={n:4d}  law={ols_error_law(p.d, n):.4f}"]
    for family in ("gaussian", "less", "uniform"):
        errs = [sketch_and_solve_ols(p, SketchSpec(family, n, seed=(n, t))).normalized_error
                for t in range(trials)]
        row.append(f"{family}={np.mean(errs):.4f}")
    print("  ".join(row))
