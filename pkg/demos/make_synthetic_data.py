"""
Build the seeded demonstration dataset in ``data/synthetic_sites.csv``.

Twelve synthetic sites sampled monthly from 2008: clean and dirty states,
improving and worsening trends, late ">9700" censoring, "<4" readings, a
short record, and two neighbouring sites whose same-day readings are
strongly correlated.
"""
import datetime as dt
import math
from pathlib import Path

import numpy as np

from ecoli_lognormal.estimation import CensorKind, Sample
from ecoli_lognormal.ingest import SiteSeries, write_records
from ecoli_lognormal.synthetic import correlated_logs, lognormal_series, monthly_dates

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic_sites.csv"

rng = np.random.default_rng(20200903)
start = dt.date(2008, 1, 15)
late = dt.date(2015, 1, 1)
series = []

sites = [
    # site, mu, sigma, slope, months, censoring
    ("S01", 3.6, 0.9, 0.00, 144, {}),
    ("S02", 4.2, 1.1, -0.02, 144, {"censor_below": 4, "censor_after": dt.date(2012, 7, 1)}),
    ("S03", 4.6, 1.3, 0.00, 144, {}),
    ("S04", 5.3, 1.5, -0.08, 144, {"censor_above": 9700, "censor_after": late}),
    ("S05", 5.6, 1.6, 0.05, 144, {"censor_above": 9700, "censor_after": late}),
    ("S06", 6.2, 1.4, 0.00, 144, {"censor_above": 9700, "censor_after": late}),
    ("S07", 5.0, 1.5, 0.10, 51, {"censor_above": 9700}),
    ("S08", 4.9, 1.2, -0.15, 144, {}),
    ("S09", 3.0, 0.7, 0.00, 40, {"censor_below": 4}),
    ("S10", 5.8, 1.9, 0.00, 144, {"censor_above": 9700, "censor_after": late}),
]
for site, mu, sigma, slope, months, cens in sites:
    dates = monthly_dates(start if months > 60 else dt.date(2015, 1, 15), months)
    s = lognormal_series(rng, mu, sigma, months, slope=slope, dates=dates, **cens)
    series.append(SiteSeries(site, tuple(s)))

dates = monthly_dates(dt.date(2010, 1, 12), 120, day=12)
a, b = correlated_logs(rng, len(dates), 0.93, mu=(5.4, 5.5), sigma=(1.5, 1.5))
for site, logs in (("S42", a), ("S43", b)):
    samples = []
    for d, x in zip(dates, logs):
        if x > math.log(9700):
            samples.append(Sample(d, 9700.0, CensorKind.RIGHT))
        else:
            samples.append(Sample(d, float(round(math.exp(x)))))
    series.append(SiteSeries(site, tuple(samples)))

with open(OUT, "w", newline="", encoding="utf-8") as fh:
    write_records(series, fh)
print(f"wrote {sum(s.n for s in series)} readings for {len(series)} sites to {OUT}")
