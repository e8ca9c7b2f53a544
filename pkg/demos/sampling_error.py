"""
How much more data the percentile method needs than the parametric one.

For normal log counts the large-sample standard error of a percentile is
c_p * sigma / sqrt(n) by ranking and d_p * sigma / sqrt(n) from the fitted
mean and SD. We print the coefficients, check the 95th-percentile ratio by
simulation, and show the small-sample bias of the Hazen estimate.
"""
import math

import numpy as np
from scipy import stats

from ecoli_lognormal import LogNormalParams, confidence_ellipse, hazen_percentile, sampling_coefficients

print(" p      c_p    d_p   factor")
for p in (0.5, 0.66, 0.7, 0.8, 0.9, 0.95):
    s = sampling_coefficients(p)
    print(f"{p:4.2f}  {s.c:6.3f} {s.d:6.3f} {s.factor:6.3f}")

rng = np.random.default_rng(1)
z95 = stats.norm.ppf(0.95)
print("\nHazen P95 of n standard normals, by simulation (100,000 runs):")
for n in (12, 24, 60, 120):
    x = rng.standard_normal((100_000, n))
    hz = hazen_percentile(x, 0.95)
    par = x.mean(1) + z95 * x.std(1, ddof=1)
    print(f"  n={n:3d}  bias {hz.mean() - z95:+.4f}  variance ratio {hz.var() / par.var():.3f}")

print("\n67% confidence ellipse half-widths for sigma = 1.5:")
for n in (60, 120):
    e = confidence_ellipse(LogNormalParams(math.log(150), 1.5, n))
    print(f"  n={n:3d}  mu +/- {e.semi_mu:.3f}, sigma +/- {e.semi_sigma:.3f}")
