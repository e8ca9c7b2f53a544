"""
A site whose true P95 is 1750 (category D) is sampled 60 times.

How often does each method wrongly report P95 <= 1200? The parametric
rate also has an exact answer through the noncentral t distribution,
shown alongside the simulated one.

    python demos/false_pass.py [figure.png]
"""
import sys

import numpy as np

from ecoli_lognormal import ScenarioSpec, run_state_experiment

spec = ScenarioSpec(median=150, p95=1750, per_year=12, years=5, replications=100_000, seed=2020)
rep = run_state_experiment(spec, threshold=1200)

print(f"true P95 {rep.true_p95:.0f}, true category {rep.true_category}")
for name, m in rep.methods.items():
    print(f"{name:>10}: false pass {m.false_pass:.3f} +/- {m.pass_se:.3f}, "
          f"median estimate {m.quantiles['0.5']:.0f}, misclassified {m.misclassified:.3f}")
print(f"exact parametric false pass {rep.predicted_parametric_pass:.3f}")

if len(sys.argv) > 1:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, v in rep.estimates.items():
        ax.hist(np.exp(v), bins=np.geomspace(300, 10_000, 80), histtype="step", density=True, label=name)
    ax.axvline(1200, color="k", ls="--")
    ax.set_xscale("log")
    ax.set_xlabel("estimated P95")
    ax.legend()
    fig.savefig(sys.argv[1], dpi=120, bbox_inches="tight")
    print(f"figure written to {sys.argv[1]}")
