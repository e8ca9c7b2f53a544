"""Seeded synthetic monitoring series for tests and demos."""
from __future__ import annotations

import datetime as dt
import math
from typing import List, Optional

import numpy as np

from .estimation import CensorKind, Sample


def monthly_dates(start: dt.date, count: int, day: int = 15) -> List[dt.date]:
    out = []
    y, m = start.year, start.month
    for _ in range(count):
        out.append(dt.date(y, m, day))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out


def lognormal_series(rng: np.random.Generator, mu: float, sigma: float, count: int,
                     start: dt.date = dt.date(2010, 1, 15), slope: float = 0.0,
                     censor_above: Optional[float] = None, censor_below: Optional[float] = None,
                     censor_after: Optional[dt.date] = None, dates=None) -> List[Sample]:
    """Monthly lognormal readings with optional trend and censoring.

    ``slope`` is per year on the log scale, measured from the first date.
    Readings above ``censor_above`` (below ``censor_below``) are reported
    as censored at that bound, only from ``censor_after`` onwards if given.
    """
    dates = dates if dates is not None else monthly_dates(start, count, start.day)
    t = np.array([(d - dates[0]).days / 365.25 for d in dates])
    logs = mu + slope * t + sigma * rng.standard_normal(len(dates))
    out = []
    for d, x in zip(dates, logs):
        active = censor_after is None or d >= censor_after
        if active and censor_above is not None and x > math.log(censor_above):
            out.append(Sample(d, float(censor_above), CensorKind.RIGHT))
        elif active and censor_below is not None and x < math.log(censor_below):
            out.append(Sample(d, float(censor_below), CensorKind.LEFT))
        else:
            out.append(Sample(d, float(round(math.exp(x), 6))))
    return out


def correlated_logs(rng: np.random.Generator, count: int, rho: float, mu=(5.0, 5.0), sigma=(1.2, 1.2)):
    """Two log-value series with correlation ``rho`` via a shared normal factor."""
    if not -1 <= rho <= 1:
        raise ValueError("rho must lie in [-1, 1]")
    common = rng.standard_normal(count)
    a = math.sqrt(abs(rho))
    out = []
    for i in range(2):
        sign = -1.0 if (rho < 0 and i == 1) else 1.0
        e = sign * a * common + math.sqrt(1 - abs(rho)) * rng.standard_normal(count)
        out.append(mu[i] + sigma[i] * e)
    return out[0], out[1]
