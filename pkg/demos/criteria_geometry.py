"""
The four swimming criteria as straight lines in (mu, sigma).

Every rule "statistic <= bound" becomes mu + z * sigma <= log(bound), so
each category is a polygon. This script tabulates where the category
frontiers sit, which rule draws each piece, and (optionally) plots them.

    python demos/criteria_geometry.py [figure.png]
"""
import sys

import numpy as np

from ecoli_lognormal.criteria import Category, category_polygons, classify_parametric, frontier_segments, frontiers_at

SIGMA_RANGE = (0.2, 3.0)

print("Frontier positions at a few spreads (mu on the log scale):")
for sigma in (0.5, 1.0, 1.5, 2.0, 2.5):
    cells = [f"{lo.name}|{hi.name} {mu:5.2f} ({crit})" for lo, hi, mu, crit in frontiers_at(sigma)]
    print(f"  sigma={sigma:3.1f}: " + ", ".join(cells))

print("\nWhich rule draws each frontier over sigma in [0.2, 3]:")
for seg in frontier_segments(SIGMA_RANGE):
    print(f"  {seg.lower.name}|{seg.upper.name}  sigma {seg.sigma_start:5.3f}-{seg.sigma_end:5.3f}  {seg.criterion}")

# a typical river site: median 150, sigma 1.5
mu = np.log(150)
print(f"\nmedian 150 with sigma 1.5 falls in category {classify_parametric(mu, 1.5).name}")

if len(sys.argv) > 1:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    colours = {c: c.colour.lower() for c in Category}
    colours[Category.B] = "green"
    colours[Category.C] = "gold"
    fig, ax = plt.subplots(figsize=(6, 5))
    for poly in category_polygons(SIGMA_RANGE):
        v = poly.vertices(2.0, 8.0, SIGMA_RANGE)
        ax.fill(v[:, 0], v[:, 1], color=colours[poly.category], alpha=0.5, label=poly.category.name)
    ax.set_xlabel("mu (log count)")
    ax.set_ylabel("sigma")
    ax.set_xlim(2, 8)
    ax.legend(loc="upper right")
    fig.savefig(sys.argv[1], dpi=120, bbox_inches="tight")
    print(f"figure written to {sys.argv[1]}")
