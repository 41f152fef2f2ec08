"""
Q-Q data with bands and split markers
=====================================

Build the plot-ready data for a normal Q-Q plot of daily returns: the
standardized order statistics, a pointwise 95% band and the two vertical
lines at the 20/60/20 quantiles. Nothing is drawn; the CSV plus JSON
sidecar can be fed to any plotting tool.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from quantcond import numerics
from quantcond.conditional_moments import QuantileWindow
from quantcond.diagnostics import qq_dataset, write_qq

window = QuantileWindow(0.198, 0.802)

# %%
# Heavy-tailed "returns". The tails inflate the sample sd used for
# standardizing, which squeezes the centre as well, so points leave the band
# inside the central window too.
returns = 0.01 * numerics.sample_student_t(numerics.StreamKey(3), 3, 750)
ds = qq_dataset(returns, window)
outside = (ds.sample < ds.band_lower) | (ds.sample > ds.band_upper)
central = (ds.theoretical > ds.markers[0]) & (ds.theoretical < ds.markers[1])
print(f"markers at {ds.markers[0]:.4f} and {ds.markers[1]:.4f}")
print(f"points outside the band: {outside.sum()} of {ds.n} "
      f"({outside[central].sum()} inside the central window)")

# %%
out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
csv_path, meta_path = write_qq(ds, out_dir / "qq_t3.csv")
print("wrote", csv_path, "and", meta_path)
