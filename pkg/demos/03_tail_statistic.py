"""
How heavy are the tails?
========================

S_n compares the full-sample variance with the variance a normal law would
imply from the central window alone. It is centred near zero for normal
data and grows with tail weight. A Monte Carlo null table turns a single
value into a z-score and a percentile.
"""

import numpy as np

from quantcond import numerics
from quantcond.tail_statistic import compare_to_null, mc_null_table, s_n

n = 2500

# %%
# Null tables for a few reference laws (fewer replications than the
# 10,000 behind the published table, to keep the demo quick).
tables = {"normal": mc_null_table("normal", n, 1000, seed=1)}
for df in (3, 5, 10, 30):
    tables[f"t({df})"] = mc_null_table("student-t", n, 1000, seed=1, df=df)
for label, table in tables.items():
    print(f"{label:>8}: mean {table.mean:8.3f}   sd {table.sd:7.3f}")

# %%
# One normal and one t(4) sample, each judged against the normal null.
key = numerics.StreamKey(99)
for label, sample in (("normal", numerics.sample_standard_normal(key, n)),
                      ("t(4)", numerics.sample_student_t(key, 4, n))):
    res = s_n(sample)
    cmp = compare_to_null(res, tables["normal"])
    print(f"{label:>6} sample: S_n = {res.s_n:7.3f}   z = {cmp['z_score']:7.2f}   "
          f"percentile = {cmp['percentile']:.3f}")

# %%
# S_n ignores location and scale.
x = numerics.sample_standard_normal(numerics.StreamKey(5), n)
print("S_n(x) =", round(s_n(x).s_n, 12), "  S_n(0.01 x + 3) =", round(s_n(0.01 * x + 3).s_n, 12))
