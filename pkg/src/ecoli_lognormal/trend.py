"""
Log-linear trends: ``log(count) ~ N(mu0 + m * t, sigma)`` with t in years.

A slope of ``m = -0.05`` is roughly a 5% fall in E. coli levels per year.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .criteria import DEFAULT_THRESHOLDS, Category, CriteriaThresholds, classify_parametric
from .estimation import (
    DEFAULT_MAX_CENSORED,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    ConvergenceError,
    LogNormalParams,
    Sample,
    _arrays,
    _check_policy,
    check_censoring,
    impute_fixed_point,
)

DAYS_PER_YEAR = 365.25
EXTRAPOLATION_WARN_YEARS = 2.0


class TrendError(ValueError):
    """Too few points or no time spread to fit a slope."""


def years_between(start: dt.date, end: dt.date) -> float:
    return (end - start).days / DAYS_PER_YEAR


def ols_line(t, y):
    """Least-squares line along the last axis of ``y``.

    Returns ``(intercept, slope, resid_sd)`` with the n-2 divisor. ``t`` is
    shared by every series.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    tc = t - t.mean()
    sxx = np.dot(tc, tc)
    ybar = y.mean(axis=-1)
    slope = (y @ tc) / sxx
    intercept = ybar - slope * t.mean()
    resid = y - (intercept[..., None] + slope[..., None] * t)
    sd = np.sqrt(np.sum(resid ** 2, axis=-1) / (t.size - 2))
    return intercept, slope, sd


@dataclass(frozen=True)
class TrendFit:
    """Fitted trend for one site; time is in years since ``origin``."""

    slope: float
    intercept: float
    sigma: float
    se_slope: float
    n: int
    span: float
    origin: dt.date
    t_mean: float
    sxx: float
    censored_count: int = 0
    iterations: int = 0
    last_date: Optional[dt.date] = None
    times: np.ndarray = field(default=None, repr=False, compare=False)
    residuals: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def z(self) -> float:
        if self.se_slope == 0:
            return math.copysign(math.inf, self.slope) if self.slope != 0 else 0.0
        return self.slope / self.se_slope

    def level_at(self, t: float) -> float:
        return self.intercept + self.slope * t

    def se_at(self, t: float) -> float:
        """Standard error of the fitted line at ``t`` years."""
        return self.sigma * math.sqrt(1.0 / self.n + (t - self.t_mean) ** 2 / self.sxx)


def fit_trend(samples: Sequence[Sample], censor_policy: str = "impute",
              max_censored_fraction: float = DEFAULT_MAX_CENSORED,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> TrendFit:
    """Ordinary least squares of log value on time.

    Censored readings are clamped, dropped, or imputed; imputation takes
    conditional means about the current fitted line and iterates jointly
    with the regression.
    """
    policy = _check_policy(censor_policy)
    samples = sorted(samples)
    if len(samples) < 3:
        raise TrendError(f"need at least 3 samples, got {len(samples)}")
    logs, kinds = _arrays(samples)
    check_censoring(kinds, max_censored_fraction)
    origin = samples[0].date
    t = np.array([years_between(origin, s.date) for s in samples])
    n_cens = int(np.sum(kinds != 0))

    if policy == "drop":
        keep = kinds == 0
        t, logs, kinds = t[keep], logs[keep], kinds[keep]
        n_cens = 0
    if t.size < 3:
        raise TrendError(f"need at least 3 usable samples, got {t.size}")
    if np.ptp(t) <= 0:
        raise TrendError("samples span no time")

    def line(y):
        b0, b1, sd = ols_line(t, y)
        return b0[..., None] + b1[..., None] * t, sd

    iterations = 0
    y = logs
    if policy == "impute":
        y, _, _, iterations, converged = impute_fixed_point(logs, kinds, line, tol, max_iter)
        if not converged:
            raise ConvergenceError(f"trend imputation did not converge in {max_iter} iterations")
    b0, b1, sd = ols_line(t, y)
    b0, b1, sd = float(b0), float(b1), float(sd)
    sxx = float(np.sum((t - t.mean()) ** 2))
    return TrendFit(
        slope=b1, intercept=b0, sigma=sd, se_slope=sd / math.sqrt(sxx), n=int(t.size),
        span=float(np.ptp(t)), origin=origin, t_mean=float(t.mean()), sxx=sxx,
        censored_count=n_cens, iterations=iterations, last_date=samples[-1].date,
        times=t, residuals=y - (b0 + b1 * t),
    )


def residual_halves(fit: TrendFit):
    """Residual SD of the later half over the earlier half, with a two-sided F-test p-value.

    Diagnostic only; fits do not depend on it.
    """
    r = fit.residuals
    h = r.size // 2
    if h < 2:
        raise TrendError("too few residuals to compare halves")
    first, second = r[:h], r[h:]
    v1, v2 = np.var(first, ddof=1), np.var(second, ddof=1)
    ratio = math.sqrt(v2 / v1)
    f = v2 / v1
    cdf = stats.f.cdf(f, second.size - 1, first.size - 1)
    return ratio, float(2 * min(cdf, 1 - cdf))


@dataclass(frozen=True)
class StateAtTime:
    date: dt.date
    params: LogNormalParams
    se_mu: float
    category: Category
    extrapolation: float  # years beyond the data (0 inside the span)

    @property
    def extrapolated(self) -> bool:
        return self.extrapolation > EXTRAPOLATION_WARN_YEARS

    @property
    def median(self) -> float:
        return math.exp(self.params.mu)


def state_at(fit: TrendFit, date: Optional[dt.date] = None,
             thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> StateAtTime:
    """State ``(mu0 + m t, sigma_res)`` on ``date`` (default: last sample date)."""
    date = date or fit.last_date
    t = years_between(fit.origin, date)
    mu = fit.level_at(t)
    params = LogNormalParams(mu, fit.sigma, fit.n, fit.censored_count)
    end = fit.span
    extra = max(0.0, t - end, -t)
    return StateAtTime(date, params, fit.se_at(t), classify_parametric(params, thresholds=thresholds), extra)


def project(mu: float, slope: float, years: float) -> float:
    return mu + slope * years


# --- power analysis ---------------------------------------------------------

def trend_se(sigma: float, years: float, per_year: float) -> float:
    """Expected slope SE for ``per_year`` evenly spaced samples over ``years``."""
    if sigma < 0 or years <= 0 or per_year <= 0:
        raise ValueError("sigma must be non-negative; years and per_year positive")
    return math.sqrt(12.0) * sigma * years ** -1.5 * per_year ** -0.5


def required_samples(sigma: float, years: float, slope: float) -> float:
    """Samples per year for which the expected slope SE equals ``|slope|``."""
    if slope == 0:
        raise ValueError("slope must be nonzero")
    if years <= 0 or sigma < 0:
        raise ValueError("years must be positive and sigma non-negative")
    return 12.0 * sigma ** 2 / (years ** 3 * slope ** 2)


def solve_power(sigma: Optional[float] = None, years: Optional[float] = None,
                per_year: Optional[float] = None, slope: Optional[float] = None) -> Dict[str, float]:
    """Given any three of sigma, years, per_year and slope, solve ``SE = |slope|`` for the fourth."""
    given = {"sigma": sigma, "years": years, "per_year": per_year, "slope": slope}
    missing = [k for k, v in given.items() if v is None]
    if len(missing) != 1:
        raise ValueError(f"exactly one of {list(given)} must be omitted, got missing={missing}")
    for k, v in given.items():
        if v is not None and k != "slope" and v <= 0:
            raise ValueError(f"{k} must be positive")
    if slope is not None and slope == 0:
        raise ValueError("slope must be nonzero")
    (key,) = missing
    if key == "slope":
        given["slope"] = trend_se(sigma, years, per_year)
    elif key == "per_year":
        given["per_year"] = required_samples(sigma, years, slope)
    elif key == "years":
        given["years"] = (12.0 * sigma ** 2 / (per_year * slope ** 2)) ** (1.0 / 3.0)
    else:
        given["sigma"] = abs(slope) * math.sqrt(per_year * years ** 3 / 12.0)
    given["se"] = trend_se(given["sigma"], given["years"], given["per_year"])
    given["solved"] = key
    return given


# --- populations of fits ----------------------------------------------------

@dataclass(frozen=True)
class TierCounts:
    improving: Dict[int, int]
    deteriorating: Dict[int, int]
    not_significant: int
    total: int

    def rows(self) -> List[dict]:
        out = [{"tier": f"improving_{k}sigma", "count": v} for k, v in self.improving.items()]
        out += [{"tier": f"deteriorating_{k}sigma", "count": v} for k, v in self.deteriorating.items()]
        out.append({"tier": "not_significant", "count": self.not_significant})
        out.append({"tier": "total", "count": self.total})
        return out


def significance_tiers(fits: Sequence[TrendFit], levels=(1, 2, 3)) -> TierCounts:
    """Counts of sites whose ``|m| / se_m`` reaches 1, 2 and 3 (cumulative)."""
    if not fits:
        raise ValueError("significance_tiers needs at least one fit")
    z = np.array([f.z for f in fits], dtype=float)
    improving = {k: int(np.sum(z <= -k)) for k in levels}
    deteriorating = {k: int(np.sum(z >= k)) for k in levels}
    return TierCounts(improving, deteriorating, int(np.sum(np.abs(z) < levels[0])), len(fits))


@dataclass(frozen=True)
class TrendPopulation:
    n: int
    mean_slope: float
    observed_variance: float
    mean_se_squared: float
    median_se: float
    true_variance: float

    @property
    def true_sd(self) -> float:
        return math.sqrt(self.true_variance)


def deconvolve_trends(fits: Sequence[TrendFit]) -> TrendPopulation:
    """Spread of true trends after removing the sampling noise of each slope.

    Observed slopes are modelled as true slope plus independent noise, so
    the true variance is the observed variance less the mean squared SE,
    floored at zero.
    """
    if len(fits) < 2:
        raise ValueError("deconvolve_trends needs at least two fits")
    m = np.array([f.slope for f in fits])
    se = np.array([f.se_slope for f in fits])
    var_obs = float(np.var(m, ddof=1))
    mse = float(np.mean(se ** 2))
    return TrendPopulation(len(fits), float(m.mean()), var_obs, mse, float(np.median(se)),
                           max(0.0, var_obs - mse))
