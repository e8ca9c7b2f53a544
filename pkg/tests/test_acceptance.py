"""Acceptance criteria, one test each, at their stated tolerances.

Each check prints a single ``ACCEPTANCE n PASS|FAIL`` line; the lines are
repeated in the pytest terminal summary. Run this file directly
(``python tests/test_acceptance.py``) for the lines alone.
"""
import datetime as dt
import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

import acceptance_log
import oracles
from ecoli_lognormal.criteria import (
    DEFAULT_THRESHOLDS,
    Category,
    EmpiricalStats,
    active_criteria,
    classify_parametric,
    classify_parametric_array,
    classify_percentile,
    half_planes,
)
from ecoli_lognormal.estimation import alpha_factor, fit_lognormal, hazen_percentile, sampling_coefficients
from ecoli_lognormal.simulate import ScenarioSpec, run_state_experiment
from ecoli_lognormal.synthetic import lognormal_series
from ecoli_lognormal.trend import fit_trend, trend_se

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "synthetic_sites.csv"
Z95 = stats.norm.ppf(0.95)
R = 100_000

TABLE = [
    (0.5, 1.253, 1.0, 1.570), (0.66, 1.293, 1.042, 1.540), (0.7, 1.318, 1.067, 1.526),
    (0.8, 1.429, 1.163, 1.510), (0.9, 1.709, 1.350, 1.603), (0.95, 2.113, 1.534, 1.897),
]


def check_1():
    misses = []
    for p, c, d, f in TABLE:
        got = sampling_coefficients(p)
        for label, want, have in (("c", c, got.c), ("d", d, got.d), ("factor", f, got.factor)):
            if abs(have - want) > 1e-3:
                misses.append(f"p={p} {label} {have:.4f} vs {want}")
    ok = not misses
    return ok, "all 18 values within 0.001" if ok else "; ".join(misses)


def check_2():
    start = time.perf_counter()
    rep = run_state_experiment(ScenarioSpec(median=150, p95=1750, per_year=12, years=5, replications=R, seed=2020),
                               threshold=1200)
    secs = time.perf_counter() - start
    pct = rep.methods["percentile"].false_pass
    par = rep.methods["parametric"].false_pass
    ok = abs(pct - 0.18) <= 0.02 and abs(par - 0.10) <= 0.02 and secs < 60
    return ok, f"percentile {pct:.4f}, parametric {par:.4f} (exact {rep.predicted_parametric_pass:.4f}), {secs:.1f}s"


def check_3():
    cases = [((1.5, 10, 12), 0.047), ((1.5, 10, 52), 0.023), ((1.5, 5, 12), 0.13), ((1.5, 5, 52), 0.064)]
    got = [float(f"{trend_se(*args):.2g}") for args, _ in cases]
    ok = all(g == want for g, (_, want) in zip(got, cases))
    return ok, ", ".join(f"{g:g}" for g in got)


def _hazen_bias(n, seed):
    rng = np.random.default_rng(seed)
    est = np.concatenate([hazen_percentile(rng.standard_normal((10_000, n)), 0.95) for _ in range(R // 10_000)])
    return est.mean() - Z95, est.std(ddof=1) / math.sqrt(est.size)


def check_4():
    parts, ok = [], True
    for n, target, seed in ((12, -0.07, 412), (60, -0.008, 460)):
        bias, se = _hazen_bias(n, seed)
        good = abs(bias - target) <= 3 * se
        ok &= good
        parts.append(f"n={n} bias {bias:+.4f} (target {target}, 3SE {3 * se:.4f}, exact {oracles.hazen_p95_bias(n):+.4f})")
    return ok, "; ".join(parts)


def check_5():
    parts, ok = [], True
    mu, sigma = 2.0, 1.3
    for n, seed in ((12, 512), (60, 560)):
        rng = np.random.default_rng(seed)
        x = mu + sigma * rng.standard_normal((R, n))
        est = x.mean(1) + alpha_factor(n) * x.std(1, ddof=1) * Z95
        err = est.mean() - (mu + Z95 * sigma)
        se = est.std(ddof=1) / math.sqrt(R)
        good = abs(err) <= 3 * se
        ok &= good
        parts.append(f"n={n} error {err:+.5f} (3SE {3 * se:.5f})")
    return ok, "; ".join(parts)


def check_6(sites=100):
    ordered = 0
    for seq in np.random.SeedSequence(124).spawn(sites):
        rng = np.random.default_rng(seq)
        samples = lognormal_series(rng, 4.5, 1.3, 120, start=dt.date(2010, 1, 15), slope=0.1,
                                   censor_above=400.0, censor_after=dt.date(2015, 1, 15))
        m = {p: fit_trend(samples, p).slope for p in ("drop", "clamp", "impute")}
        ordered += m["drop"] < m["clamp"] < m["impute"]
    frac = ordered / sites
    return frac >= 0.95, f"drop < clamp < impute at {ordered}/{sites} sites"


def check_7():
    rng = np.random.default_rng(7)
    mu = rng.uniform(2.0, 8.5, 1000)
    sigma = rng.uniform(0.2, 3.0, 1000)
    agree = sum(int(classify_parametric(m, s)) == oracles.classify_by_cdf(m, s) for m, s in zip(mu, sigma))
    return agree == 1000, f"{agree}/1000 agree"


def _boundary_clearance(mu, sigma):
    """Lower bound on the distance from (mu, sigma) to any category boundary.

    ``{category <= k}`` is an intersection of half-planes, hence convex:
    inside it the distance to its edge is the least line distance, outside
    it is at least the largest violated-line distance.
    """
    planes = half_planes()
    clear = math.inf
    for k in range(4):
        lines = []
        for crit in ("P50", "P95", "G540", "G260"):
            own = [p for p in planes if p.criterion == crit and p.category <= k]
            if k < DEFAULT_THRESHOLDS.table(crit)[2]:
                lines.append(max(own, key=lambda p: p.category))
        dist = [(mu + p.z * sigma - p.bound) / math.hypot(1, p.z) for p in lines]
        inside = all(d <= 0 for d in dist)
        clear = min(clear, -max(dist) if inside else max(d for d in dist if d > 0))
    return clear


def _clear_points(per_category, margin, seed):
    rng = np.random.default_rng(seed)
    pts = {c: [] for c in Category}
    while any(len(v) < per_category for v in pts.values()):
        m, s = rng.uniform(3.0, 7.5), rng.uniform(0.2, 2.0)
        c = classify_parametric(m, s)
        if len(pts[c]) < per_category and _boundary_clearance(m, s) >= margin:
            pts[c].append((m, s))
    return [p for c in Category for p in pts[c]]


def check_8():
    # ten points per category, all at least 0.05 from every boundary
    pts = _clear_points(10, 0.05, 8)
    g540, g260 = math.log(540), math.log(260)
    trials = agree = 0
    moderate = [0, 0]
    misses = []
    for i, (mu, sigma) in enumerate(pts):
        rng = np.random.default_rng([8, i])
        x = mu + sigma * rng.standard_normal((100, 10_000))
        par = classify_parametric_array(x.mean(1), x.std(1, ddof=1))
        p50 = np.exp(hazen_percentile(x, 0.5))
        p95 = np.exp(hazen_percentile(x, 0.95))
        f260, f540 = (x > g260).mean(1), (x > g540).mean(1)
        same = [int(classify_percentile(EmpiricalStats(p50[j], p95[j], f260[j], f540[j], 10_000))) == int(par[j])
                for j in range(100)]
        trials += 100
        agree += sum(same)
        if sigma <= 1.2:
            moderate[0] += sum(same)
            moderate[1] += 100
        if not all(same):
            misses.append(f"({mu:.3f}, {sigma:.3f}) clearance {_boundary_clearance(mu, sigma):.3f}")
    detail = f"{agree}/{trials} trials agree; sigma <= 1.2 subset {moderate[0]}/{moderate[1]}"
    if misses:
        detail += "; disagreement at " + ", ".join(misses)
    return agree == trials, detail


def check_9():
    ab = active_criteria(Category.A, Category.B, (0.2, 3.0))
    de = active_criteria(Category.D, Category.E, (0.2, 3.0))
    ok = ab == {"P95"} and de == {"G540"}
    return ok, f"A-B governed by {sorted(ab)}, D-E by {sorted(de)}"


def check_10(trials=1000):
    mu, sigma, n = 5.0, 1.5, 144
    bound = math.exp(mu + sigma * stats.norm.ppf(0.9))
    inside = 0
    for seq in np.random.SeedSequence(10).spawn(trials):
        rng = np.random.default_rng(seq)
        p = fit_lognormal(lognormal_series(rng, mu, sigma, n, censor_above=bound)).params
        inside += math.hypot(p.mu - mu, p.sigma - sigma) <= 3 * math.hypot(p.se_mu, p.se_sigma)
    return inside / trials >= 0.99, f"{inside}/{trials} fits within 3 combined SEs"


def check_11(tmp: Path):
    scen = tmp / "scenario.json"
    scen.write_text(json.dumps({"median": 150, "p95": 1750, "replications": 20_000, "seed": 11}))
    runs = {
        "classify": ["classify", DATA],
        "trend": ["trend", DATA, "--at-date", "2020-01-01"],
        "power": ["power", "--sigma", "1.5", "--years", "10", "--per-year", "12"],
        "simulate": ["simulate", scen, "--format", "json", "--workers", "2"],
        "simulate-trend": ["simulate", scen, "--kind", "trend"],
        "correlate": ["correlate", DATA],
        "boundaries": ["boundaries"],
    }
    differ = []
    for name, argv in runs.items():
        outs = [subprocess.run([sys.executable, "-m", "ecoli_lognormal", *map(str, argv)],
                               capture_output=True, check=False).stdout for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            differ.append(name)
    ok = not differ
    return ok, f"{len(runs)} commands byte-identical" if ok else f"differ: {differ}"


NAMES = {
    1: "sampling coefficients", 2: "false-pass rates", 3: "trend detectability", 4: "Hazen bias",
    5: "unbiased parametric percentile", 6: "censoring ordering", 7: "classifier oracle",
    8: "large-sample agreement", 9: "boundary activity", 10: "imputation recovery", 11: "determinism",
}


def _run(number, *args):
    ok, detail = globals()[f"check_{number}"](*args)
    acceptance_log.record(number, NAMES[number], ok, detail)
    assert ok, detail


@pytest.mark.parametrize("number", [1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
def test_acceptance(number):
    _run(number)


def test_acceptance_11(tmp_path):
    _run(11, tmp_path)


if __name__ == "__main__":
    import tempfile

    for k in range(1, 11):
        acceptance_log.record(k, NAMES[k], *globals()[f"check_{k}"]())
    with tempfile.TemporaryDirectory() as d:
        acceptance_log.record(11, NAMES[11], *check_11(Path(d)))
