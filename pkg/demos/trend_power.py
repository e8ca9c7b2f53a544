"""
How long and how often to sample to see a trend.

With n evenly spaced samples a year for T years, the slope standard
error is sqrt(12) * sigma * T**-1.5 * n**-0.5. We tabulate it, invert it
for the sampling rate, and check it against simulated fits.
"""
from ecoli_lognormal import ScenarioSpec, required_samples, run_trend_experiment, trend_se

sigma = 1.5
print("slope SE for sigma = 1.5")
print("years  12/yr   52/yr")
for years in (3, 5, 10, 15):
    print(f"{years:5d}  {trend_se(sigma, years, 12):.4f}  {trend_se(sigma, years, 52):.4f}")

for years, slope in ((10, 0.047), (5, 0.13), (5, 0.05)):
    print(f"to see |m| = {slope} in {years} years: {required_samples(sigma, years, slope):.1f} samples/yr")

for slope in (0.0, -0.13):
    rep = run_trend_experiment(ScenarioSpec(mu=5.0, sigma=sigma, trend=slope, years=5, per_year=12,
                                            replications=20_000, seed=5))
    print(f"\ntrue slope {slope:+.2f}: fitted slope SD {rep.slope_sd:.4f} (formula {rep.se_closed_form:.4f})")
    for k in ("1", "2", "3"):
        print(f"  |z| >= {k}: {rep.detection[k]:.3f} (exact {rep.predicted_detection[k]:.3f})")
