"""Do LESS rows behave like Gaussian rows?

We whiten single sketch rows and look at the quadratic form |z^T B z - tr B|.
Sub-gaussian rows keep its tails close to the Gaussian ones. Sparse rows
without averaging (the "hard example") have much heavier tails, which is why
LESS averages k = d signed rows.
"""
import math

import numpy as np

from lessketch import exact_leverage_scores, gen_synthetic, hw_tail_compare, psi2_estimate, sketch_row_sampler
from lessketch.diagnostics import whitener_for
from lessketch.sketches import Family, sample_hard_example

d = 20
a = gen_synthetic(2000, d, "low", seed=2).a
white = whitener_for(a)
for family in (Family.LESS, Family.UNIFORM_ROWS, Family.GAUSSIAN):
    rows = sketch_row_sampler(family, a, profile=exact_leverage_scores(a))
    rep = hw_tail_compare(rows, white, np.eye(d), 20000, seed=3)
    print(f"{family.value:10s} " + "  ".join(f"q{lv}: {rep.ratio(lv):.2f}x" for lv in rep.quantiles))

hd = 64
hard = sample_hard_example(math.sqrt(hd), hd, 160000, seed=4)
averaged = hard.reshape(-1, 8, hd).sum(axis=1) / math.sqrt(8)
print("psi2 of one coordinate: hard example %.2f, average of 8 signed rows %.2f, normal %.2f"
      % (psi2_estimate(hard[:, 0]), psi2_estimate(averaged[:, 0]), math.sqrt(8 / 3)))
