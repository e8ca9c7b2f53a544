import math

import numpy as np
import pytest
from scipy import stats

from ecoli_lognormal.estimation import LogNormalParams
from ecoli_lognormal.simulate import (
    ScenarioSpec,
    confidence_ellipse,
    predicted_pass_rate,
    rate_se,
    run_state_experiment,
    run_trend_experiment,
)

Z95 = stats.norm.ppf(0.95)


def test_scenario_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(mu=5.0, sigma=1.0, median=100, p95=1000)
    with pytest.raises(ValueError):
        ScenarioSpec()
    with pytest.raises(ValueError):
        ScenarioSpec(mu=5.0, sigma=1.0, replications=0)
    with pytest.raises(ValueError):
        ScenarioSpec(median=500, p95=100)
    with pytest.raises(ValueError):
        ScenarioSpec.from_dict({"mu": 5.0, "sigma": 1.0, "colour": "red"})
    spec = ScenarioSpec.from_dict({"median": 150, "p95": 1750, "seed": 1})
    assert spec.params[0] == pytest.approx(math.log(150))
    assert spec.n_samples == 60
    assert ScenarioSpec.from_dict(spec.to_dict()) == spec


def test_seed_is_required():
    with pytest.raises(ValueError):
        run_state_experiment(ScenarioSpec(mu=5.0, sigma=1.0, replications=10))


def test_state_experiment_deterministic_and_worker_invariant():
    spec = ScenarioSpec(median=150, p95=1750, replications=25_000, seed=99)
    a = run_state_experiment(spec)
    b = run_state_experiment(spec, workers=3)
    assert a.to_dict() == b.to_dict()
    for k in a.estimates:
        assert np.array_equal(a.estimates[k], b.estimates[k])
    c = run_state_experiment(ScenarioSpec(median=150, p95=1750, replications=25_000, seed=100))
    assert c.to_dict() != a.to_dict()


def test_state_experiment_false_pass_matches_noncentral_t():
    spec = ScenarioSpec(median=150, p95=1750, replications=30_000, seed=5)
    rep = run_state_experiment(spec)
    par = rep.methods["parametric"]
    assert par.false_pass == par.pass_rate and par.false_fail == 0.0
    assert abs(par.pass_rate - rep.predicted_parametric_pass) < 3 * par.pass_se
    assert rep.methods["percentile"].false_pass > par.false_pass


def test_predicted_pass_rate_against_brute_force():
    rng = np.random.default_rng(0)
    x = rng.normal(5.0, 1.3, (200_000, 24))
    est = x.mean(1) + Z95 * x.std(1, ddof=1)
    rate = np.mean(est <= math.log(1200))
    assert predicted_pass_rate(5.0, 1.3, 24, 1200) == pytest.approx(rate, abs=3 * rate_se(rate, 200_000))


def test_noiseless_site_never_misclassified():
    spec = ScenarioSpec(mu=4.0, sigma=1e-9, replications=2_000, seed=3)
    rep = run_state_experiment(spec)
    assert rep.true_category == "A"
    for m in rep.methods.values():
        assert m.misclassified == 0.0
        assert m.pass_rate == 1.0


def test_p95_at_threshold_passes_half_the_time():
    sigma = 1.4
    spec = ScenarioSpec(mu=math.log(1200) - Z95 * sigma, sigma=sigma, replications=30_000, seed=8)
    rep = run_state_experiment(spec)
    assert rep.methods["parametric"].pass_rate == pytest.approx(0.5, abs=0.03)
    assert rep.true_p95 == pytest.approx(1200)


def test_high_censoring_bound_rarely_matters():
    base = dict(median=150, p95=1750, replications=20_000, seed=12)
    mu, sigma = ScenarioSpec(**base).params
    bound = math.exp(mu + stats.norm.ppf(0.999) * sigma)
    plain = run_state_experiment(ScenarioSpec(**base))
    cens = run_state_experiment(ScenarioSpec(**base, censor_above=bound))
    for name in ("percentile", "parametric"):
        a, b = plain.methods[name], cens.methods[name]
        assert abs(a.pass_rate - b.pass_rate) < a.pass_se
        assert abs(a.misclassified - b.misclassified) < a.misclassified_se


def test_unbiased_flag_centres_estimate():
    spec = ScenarioSpec(mu=0.0, sigma=1.0, per_year=12, years=1, replications=50_000, seed=4, unbiased=True)
    rep = run_state_experiment(spec)
    par = rep.methods["parametric"]
    assert abs(par.log_mean - Z95) < 3 * par.log_sd / math.sqrt(rep.replications)
    biased = run_state_experiment(ScenarioSpec(mu=0.0, sigma=1.0, per_year=12, years=1,
                                               replications=50_000, seed=4))
    assert biased.methods["parametric"].log_mean < par.log_mean


def test_report_tables():
    rep = run_state_experiment(ScenarioSpec(median=150, p95=1750, replications=5_000, seed=2))
    conf = rep.confusion_matrix()
    for name, mat in conf.items():
        assert sum(map(sum, mat)) == 5_000
        assert sum(mat[3]) == 5_000  # true category D
    rows = rep.histogram(bins=20)
    assert len(rows) == 40
    for name in ("percentile", "parametric"):
        dens = [r["density_log"] * (math.log(r["bin_hi"]) - math.log(r["bin_lo"]))
                for r in rows if r["method"] == name]
        assert sum(dens) == pytest.approx(1.0)


def test_state_experiment_rejects_trend():
    with pytest.raises(ValueError):
        run_state_experiment(ScenarioSpec(mu=5.0, sigma=1.0, trend=0.1, seed=1, replications=10))


def test_trend_experiment_slope_sd():
    spec = ScenarioSpec(mu=5.0, sigma=1.5, years=10, per_year=12, replications=20_000, seed=6)
    rep = run_trend_experiment(spec)
    assert rep.se_closed_form == pytest.approx(0.0474, abs=1e-4)
    assert rep.slope_sd == pytest.approx(0.0474, rel=0.05)
    assert abs(rep.slope_sd - rep.se_exact) < 3 * rep.slope_sd_se
    assert abs(rep.slope_mean) < 3 * rep.slope_sd / math.sqrt(rep.replications)


def test_trend_detection_matches_noncentral_t():
    spec = ScenarioSpec(mu=5.0, sigma=1.5, trend=-0.13, years=5, per_year=12, replications=20_000, seed=7)
    rep = run_trend_experiment(spec)
    for k, rate in rep.detection.items():
        assert abs(rate - rep.predicted_detection[k]) < 3 * rate_se(rate, rep.replications)
    # a true slope near one standard error is found at 1 sigma about half the time
    assert rep.detection["1"] == pytest.approx(0.51, abs=0.02)
    for k in rep.detection:
        assert rep.improving[k] + rep.deteriorating[k] == pytest.approx(rep.detection[k])
    assert rep.deteriorating["1"] < 0.05 < rep.improving["1"]


def test_trend_experiment_noiseless():
    rep = run_trend_experiment(ScenarioSpec(mu=5.0, sigma=0.0, trend=0.05, replications=100, seed=1))
    assert rep.slope_mean == pytest.approx(0.05, abs=1e-12)
    assert rep.slope_sd == pytest.approx(0.0, abs=1e-12)
    assert rep.detection["3"] == 1.0


def test_trend_experiment_deterministic_with_censoring():
    spec = ScenarioSpec(mu=5.0, sigma=1.0, trend=0.1, replications=3_000, seed=11, censor_above=600)
    a = run_trend_experiment(spec)
    b = run_trend_experiment(spec, workers=2)
    assert a.to_dict() == b.to_dict()
    assert math.isfinite(a.slope_mean)


def test_ellipse_geometry():
    p60 = LogNormalParams(5.0, 1.5, 60)
    e = confidence_ellipse(p60, 0.67)
    assert e.k == pytest.approx(math.sqrt(stats.chi2.ppf(0.67, 2)))
    assert e.k == pytest.approx(1.489, abs=1e-3)
    assert e.semi_mu == pytest.approx(e.k * 1.5 / math.sqrt(60))
    assert e.semi_sigma / e.semi_mu == pytest.approx(1 / math.sqrt(2))
    e240 = confidence_ellipse(LogNormalParams(5.0, 1.5, 240), 0.67)
    assert e240.semi_mu == pytest.approx(e.semi_mu / 2)
    assert e240.semi_sigma == pytest.approx(e.semi_sigma / 2)
    pts = e.boundary(9)
    assert np.allclose(pts[0], pts[-1])
    with pytest.raises(ValueError):
        confidence_ellipse(p60, 1.0)


def test_ellipse_coverage():
    rng = np.random.default_rng(13)
    n, R = 400, 20_000
    x = rng.normal(5.0, 1.5, (R, n))
    m, s = x.mean(1), x.std(1, ddof=1)
    e = confidence_ellipse(LogNormalParams(5.0, 1.5, n), 0.67)
    inside = ((m - 5.0) / e.semi_mu) ** 2 + ((s - 1.5) / e.semi_sigma) ** 2 <= 1
    assert inside.mean() == pytest.approx(0.67, abs=0.02)
