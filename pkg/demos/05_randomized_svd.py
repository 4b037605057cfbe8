"""Randomized low-rank approximation with LESS versus Gaussian test matrices.

The Gaussian range finder's error is well predicted by n * lambda_n, where
lambda_n inverts the statistical dimension. LESS matches it.
"""
import numpy as np

from lessketch import SketchSpec, apply_sketch, exact_leverage_scores, randomized_svd_error, statdim_inverse

rng = np.random.default_rng(6)
u = np.linalg.qr(rng.standard_normal((1000, 200)))[0]
v = np.linalg.qr(rng.standard_normal((200, 200)))[0]
a = (u * np.arange(1, 201) ** -0.5) @ v.T
prof = exact_leverage_scores(a)

for n in (5, 10, 20, 40):
    out = [f"n={n:3d}  n*lambda_n={n * statdim_inverse(a, n):.3f}"]
    for family in ("gaussian", "less", "srht"):
        errs = [randomized_svd_error(a, apply_sketch(SketchSpec(family, n, seed=(n, t)), a, prof))
                for t in range(200)]
        out.append(f"{family}={np.mean(errs):.3f}")
    print("  ".join(out))
