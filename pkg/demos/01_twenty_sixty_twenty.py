"""
The 20/60/20 split
==================

Order a bivariate normal sample by a benchmark and cut it at the quantile
q~ ~ 0.198 and at 1 - q~. The covariance of X is then the same in the bottom,
middle and top groups. Any other cut breaks the balance.
"""

import numpy as np

from quantcond import numerics
from quantcond.conditional_moments import QuantileWindow, conditional_estimates, three_way_conditional_cov
from quantcond.data_io import weighted_benchmark

from _common import panel_from_array

# %%
# The cut point solves a one-dimensional equation in the normal pdf/cdf.
x_tilde = numerics.split_root()
q_tilde = numerics.rule_split_quantile()
print(f"x~ = {x_tilde:.10f}   q~ = Phi(x~) = {q_tilde:.10f}")

# %%
# A correlated pair, benchmark Y = X1 + X2.
sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
x = numerics.sample_mv_normal(numerics.StreamKey(2024), np.zeros(2), sigma, 400_000)
panel = panel_from_array(x)
bench = weighted_benchmark(panel, [1.0, 1.0])

low, mid, high = three_way_conditional_cov(panel, bench)
for name, est in (("bottom", low), ("middle", mid), ("top", high)):
    print(f"{name:>6}: n = {est.count:6d}  cov =", np.round(est.cov, 3).tolist())

# %%
# Compare with a 10/80/10 cut: each tail group now carries less variance
# than the centre, so the three matrices no longer agree.
for p, q in ((0.0, 0.1), (0.1, 0.9), (0.9, 1.0)):
    est = conditional_estimates(panel, bench, QuantileWindow(p, q))
    print(f"({p:.1f}, {q:.1f}]: var(X1) = {est.variance[0]:.3f}")
