"""
Batch command-line front end.

Exit status: 0 on success, 2 for usage errors, 3 when input cannot be read
or parsed, 4 when a computation fails.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import math
import sys
from typing import List, Optional

from . import report
from .criteria import (
    Category,
    CriteriaThresholds,
    category_polygons,
    classify_parametric,
    classify_percentile,
    polygon_rows,
)
from .estimation import CensoringError, ConvergenceError, empirical_stats, fit_lognormal
from .ingest import RecordError, read_records, same_day_correlations
from .simulate import ScenarioSpec, run_state_experiment, run_trend_experiment
from .trend import TrendError, deconvolve_trends, fit_trend, significance_tiers, solve_power, state_at

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3, 4
Z_SENTINEL = 1e6

DEFAULTS = {
    "censor_policy": "impute",
    "method": "both",
    "format": "csv",
    "seed": None,
    "at_date": None,
    "min_pairs": 30,
    "drop_p95_below_60": False,
    "threshold": 1200.0,
    "kind": "state",
    "bins": 60,
    "workers": 1,
    "sigma_min": 0.2,
    "sigma_max": 3.0,
}


class InputError(Exception):
    pass


def _opts(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
    opts = dict(DEFAULTS)
    opts.update({k: v for k, v in cfg.items() if k != "thresholds"})
    opts.update({k: v for k, v in vars(args).items() if v is not None and k in DEFAULTS})
    try:
        opts["thresholds"] = CriteriaThresholds.from_dict(cfg.get("thresholds", {}))
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad thresholds in config: {exc}") from exc
    if opts["censor_policy"] == "clamp-to-bound":
        opts["censor_policy"] = "clamp"
    return opts


def _load(path):
    try:
        return read_records(path)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    except RecordError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _date(text):
    if text is None or isinstance(text, dt.date):
        return text
    try:
        return dt.date.fromisoformat(text)
    except ValueError as exc:
        raise InputError(f"invalid date {text!r}") from exc


def _cap(z):
    if math.isnan(z):
        return z
    return max(-Z_SENTINEL, min(Z_SENTINEL, z))


# --- subcommands ------------------------------------------------------------

def cmd_classify(args, opts):
    series = _load(args.input)
    method, policy, th = opts["method"], opts["censor_policy"], opts["thresholds"]
    use_pct, use_par = method in ("percentile", "both"), method in ("parametric", "both")
    cols = ["site", "n", "censored"]
    if use_par:
        cols += ["mu", "sigma", "se_mu", "se_sigma", "parametric_category"]
    if use_pct:
        cols += ["p50", "p95", "frac260", "frac540", "p95_used", "percentile_category"]
    cols.append("note")
    rows = []
    tallies = {m: {c.name: 0 for c in Category} | {"unavailable": 0} for m in ("percentile", "parametric")}
    for s in series:
        row = {"site": s.site, "n": s.n, "censored": s.censored_count}
        notes = []
        fit = None
        if use_par or policy == "impute":
            try:
                fit = fit_lognormal(s.samples, policy)
            except CensoringError as exc:
                notes.append(f"parametric unavailable: {exc}")
        if use_par:
            if fit is not None:
                p = fit.params
                cat = classify_parametric(p, thresholds=th)
                row.update(mu=p.mu, sigma=p.sigma, se_mu=p.se_mu, se_sigma=p.se_sigma, parametric_category=cat.name)
                tallies["parametric"][cat.name] += 1
            else:
                row["parametric_category"] = "NA"
                tallies["parametric"]["unavailable"] += 1
        if use_pct:
            es = empirical_stats(s.samples, policy, fit=fit if policy == "impute" else None)
            drop = bool(opts["drop_p95_below_60"]) and es.n < th.min_p95_samples
            cat = classify_percentile(es, drop_p95=bool(opts["drop_p95_below_60"]), thresholds=th)
            row.update(p50=es.p50, p95=es.p95, frac260=es.frac260, frac540=es.frac540,
                       p95_used=not drop, percentile_category=cat.name)
            tallies["percentile"][cat.name] += 1
        if s.duplicate_dates:
            notes.append(f"{len(s.duplicate_dates)} duplicate dates")
        row["note"] = "; ".join(notes)
        rows.append(row)
    summary_cols = ["method"] + [c.name for c in Category] + ["unavailable", "total"]
    summary = []
    for m, used in (("percentile", use_pct), ("parametric", use_par)):
        if used:
            summary.append({"method": m, **tallies[m], "total": len(series)})
    return {"sites": (cols, rows), "summary": (summary_cols, summary)}


def cmd_trend(args, opts):
    series = _load(args.input)
    at = _date(opts["at_date"])
    th = opts["thresholds"]
    cols = ["site", "n", "censored", "m", "se_m", "z", "sigma_res", "mu_now", "category_now",
            "eval_date", "mu_at", "se_mu_at", "median_at", "category_at", "extrapolated", "error"]
    rows, fits = [], []
    for s in series:
        row = {"site": s.site, "n": s.n, "censored": s.censored_count}
        try:
            fit = fit_trend(s.samples, opts["censor_policy"])
        except (TrendError, CensoringError, ConvergenceError) as exc:
            row["error"] = str(exc)
            rows.append(row)
            continue
        fits.append(fit)
        now = state_at(fit, None, th)
        later = state_at(fit, at, th)
        row.update(m=fit.slope, se_m=fit.se_slope, z=_cap(fit.z), sigma_res=fit.sigma,
                   mu_now=now.params.mu, category_now=now.category.name,
                   eval_date=later.date.isoformat(), mu_at=later.params.mu, se_mu_at=later.se_mu,
                   median_at=later.median, category_at=later.category.name,
                   extrapolated=later.extrapolated, error="")
        rows.append(row)
    tier_rows = []
    if fits:
        tiers = significance_tiers(fits)
        for r in tiers.rows():
            f = r["count"] / tiers.total
            r.update(fraction=f, fraction_se=math.sqrt(f * (1 - f) / tiers.total))
            tier_rows.append(r)
    pop_rows = []
    if len(fits) >= 2:
        pop = deconvolve_trends(fits)
        pop_rows.append({"n": pop.n, "mean_slope": pop.mean_slope, "observed_sd": math.sqrt(pop.observed_variance),
                         "rms_se": math.sqrt(pop.mean_se_squared), "median_se": pop.median_se,
                         "true_sd": pop.true_sd})
    return {
        "sites": (cols, rows),
        "tiers": (["tier", "count", "fraction", "fraction_se"], tier_rows),
        "population": (["n", "mean_slope", "observed_sd", "rms_se", "median_se", "true_sd"], pop_rows),
    }


def cmd_power(args, opts):
    try:
        res = solve_power(args.sigma, args.years, args.per_year, args.slope)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    cols = ["solved", "sigma", "years", "per_year", "slope", "se"]
    return {"power": (cols, [res])}


def cmd_simulate(args, opts):
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            data = json.load(fh)
        # --seed beats the scenario file, which beats --config
        if args.seed is not None:
            data["seed"] = args.seed
        elif data.get("seed") is None and opts["seed"] is not None:
            data["seed"] = int(opts["seed"])
        spec = ScenarioSpec.from_dict(data)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"bad scenario {args.scenario}: {exc}") from exc
    if spec.seed is None:
        raise InputError("simulate needs a seed (scenario field or --seed)")
    workers = int(opts["workers"])
    if opts["kind"] == "trend":
        rep = run_trend_experiment(spec, workers=workers)
    else:
        rep = run_state_experiment(spec, float(opts["threshold"]), opts["thresholds"], workers=workers)
    if opts["format"] == "json":
        return _json_clean(rep.to_dict())
    rows = rep.histogram(int(opts["bins"]))
    return {"histogram": (list(rows[0].keys()) if rows else ["method"], rows)}


def _json_clean(obj):
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    return report._num(obj)


def cmd_correlate(args, opts):
    series = _load(args.input)
    pairs = same_day_correlations(series, int(opts["min_pairs"]))
    rows = [{"siteA": p.site_a, "siteB": p.site_b, "n_pairs": p.n_pairs, "r": p.r} for p in pairs]
    return {"correlations": (["siteA", "siteB", "n_pairs", "r"], rows)}


def cmd_boundaries(args, opts):
    try:
        polys = category_polygons((float(opts["sigma_min"]), float(opts["sigma_max"])), opts["thresholds"])
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return {"boundaries": (["category", "segment_index", "mu", "sigma", "active_criterion"], polygon_rows(polys))}


# --- wiring -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecoli-lognormal", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--config", help="JSON file of option overrides and thresholds")
        p.add_argument("--output", help="write here instead of stdout")

    def policy(p):
        p.add_argument("--censor-policy", choices=["impute", "clamp", "clamp-to-bound", "drop"])

    p = sub.add_parser("classify", help="per-site category by percentile and parametric methods")
    p.add_argument("input")
    policy(p)
    p.add_argument("--method", choices=["percentile", "parametric", "both"])
    p.add_argument("--drop-p95-below-60", action="store_const", const=True,
                   help="skip the P95 criterion for sites with fewer than 60 samples")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("trend", help="per-site log-linear trends and projected state")
    p.add_argument("input")
    policy(p)
    p.add_argument("--at-date", help="evaluation date YYYY-MM-DD (default: last sample per site)")
    common(p)
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("power", help="solve SE(slope) = |slope| for the omitted quantity")
    p.add_argument("--sigma", type=float)
    p.add_argument("--years", type=float)
    p.add_argument("--per-year", type=float)
    p.add_argument("--slope", type=float)
    common(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("simulate", help="Monte Carlo experiment from a scenario file")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int)
    p.add_argument("--kind", choices=["state", "trend"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--bins", type=int)
    p.add_argument("--workers", type=int)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correlate", help="same-day correlation between sites")
    p.add_argument("input")
    p.add_argument("--min-pairs", type=int)
    common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("boundaries", help="category polygons in (mu, sigma)")
    p.add_argument("--sigma-min", type=float)
    p.add_argument("--sigma-max", type=float)
    common(p)
    p.set_defaults(func=cmd_boundaries)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _opts(args)
        result = args.func(args, opts)
        if isinstance(result, dict) and result and all(isinstance(v, tuple) for v in result.values()):
            text = report.emit(result, opts["format"])
        else:
            text = json.dumps(result, indent=2, allow_nan=False) + "\n"
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CensoringError, ConvergenceError, TrendError, ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
