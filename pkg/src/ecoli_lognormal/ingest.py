"""
Monitoring-record CSV input (``site,date,value``) and cross-site diagnostics.

Value tokens are a positive number, optionally prefixed by ``<`` or ``>``
for censored readings; surrounding whitespace and thousands separators
(``>24,200``) are accepted.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import itertools
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

import numpy as np

from .estimation import CensorKind, Sample

_TOKEN = re.compile(r"^\s*([<>]?)\s*((?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\s*$")


class RecordError(ValueError):
    """One or more input rows could not be parsed.

    ``errors`` lists ``(line_number, message)`` for every bad row.
    """

    def __init__(self, errors: List[Tuple[int, str]]):
        self.errors = errors
        head = "; ".join(f"line {ln}: {msg}" for ln, msg in errors[:5])
        more = f" (+{len(errors) - 5} more)" if len(errors) > 5 else ""
        super().__init__(head + more)


def parse_value(token: str) -> Tuple[CensorKind, float]:
    """``"240"`` -> exact 240; ``"<10"`` -> left-censored at 10; ``">24,200"`` -> right-censored."""
    m = _TOKEN.match(token)
    if not m:
        raise ValueError(f"unparseable value {token!r}")
    prefix = m.group(1)
    number = token.strip()[len(prefix):].strip().replace(",", "")
    value = float(number)
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"value must be positive, got {token!r}")
    kind = {"": CensorKind.EXACT, "<": CensorKind.LEFT, ">": CensorKind.RIGHT}[prefix]
    return kind, value


@dataclass(frozen=True)
class SiteSeries:
    site: str
    samples: Tuple[Sample, ...]

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def counts(self) -> Dict[str, int]:
        c = Counter(s.kind for s in self.samples)
        return {"exact": c[CensorKind.EXACT], "left": c[CensorKind.LEFT], "right": c[CensorKind.RIGHT]}

    @property
    def censored_count(self) -> int:
        return sum(s.censored for s in self.samples)

    @property
    def duplicate_dates(self) -> List[dt.date]:
        c = Counter(s.date for s in self.samples)
        return sorted(d for d, k in c.items() if k > 1)


def parse_records(stream: TextIO, errors: Optional[list] = None) -> List[SiteSeries]:
    """Read ``site,date,value`` rows into per-site series sorted by date.

    Bad rows raise a single :class:`RecordError` listing all of them, unless
    an ``errors`` list is passed, in which case they are appended to it as
    ``(line_number, message)`` and skipped.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise RecordError([(1, "empty file")]) from None
    header = [h.strip().lower() for h in header]
    if header[:3] != ["site", "date", "value"]:
        raise RecordError([(1, f"expected header site,date,value, got {','.join(header)}")])

    bad: List[Tuple[int, str]] = []
    by_site: Dict[str, List[Sample]] = defaultdict(list)
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 3:
            bad.append((line, f"expected 3 fields, got {len(row)}"))
            continue
        site, date_s, token = row[0].strip(), row[1].strip(), row[2]
        try:
            date = dt.date.fromisoformat(date_s)
        except ValueError:
            bad.append((line, f"invalid date {date_s!r}"))
            continue
        try:
            kind, value = parse_value(token)
        except ValueError as exc:
            bad.append((line, str(exc)))
            continue
        if not site:
            bad.append((line, "missing site identifier"))
            continue
        by_site[site].append(Sample(date, value, kind))

    if bad:
        if errors is None:
            raise RecordError(bad)
        errors.extend(bad)
    if not by_site and not bad:
        raise RecordError([(2, "no data rows")])
    return [SiteSeries(site, tuple(sorted(s, key=lambda x: x.date)))
            for site, s in sorted(by_site.items())]


def read_records(path, errors: Optional[list] = None) -> List[SiteSeries]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_records(fh, errors)


def write_records(series: Iterable[SiteSeries], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["site", "date", "value"])
    for s in series:
        for x in s.samples:
            w.writerow([s.site, x.date.isoformat(), x.token])


def records_to_string(series: Iterable[SiteSeries]) -> str:
    buf = io.StringIO()
    write_records(series, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class SiteInfo:
    site: str
    name: str
    lat: Optional[float] = None
    lon: Optional[float] = None


def read_site_metadata(stream: TextIO) -> Dict[str, SiteInfo]:
    """Optional ``site,name,lat,lon`` file."""
    out = {}
    for row in csv.DictReader(stream):
        lat, lon = row.get("lat") or None, row.get("lon") or None
        out[row["site"].strip()] = SiteInfo(row["site"].strip(), (row.get("name") or "").strip(),
                                            float(lat) if lat else None, float(lon) if lon else None)
    return out


# --- diagnostics ------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationPair:
    site_a: str
    site_b: str
    n_pairs: int
    r: float


def _daily_exact_logs(series: SiteSeries) -> Dict[dt.date, float]:
    days = defaultdict(list)
    for s in series.samples:
        if not s.censored:
            days[s.date].append(s.log_value)
    # repeat samples on one day are averaged
    return {d: float(np.mean(v)) for d, v in days.items()}


def same_day_correlations(series: List[SiteSeries], min_pairs: int = 30) -> List[CorrelationPair]:
    """Pearson correlation of log readings taken on the same day at two sites.

    Censored readings are excluded. Pairs with fewer than ``min_pairs``
    shared days, or with no variation, are omitted.
    """
    if min_pairs < 2:
        raise ValueError("min_pairs must be at least 2")
    daily = {s.site: _daily_exact_logs(s) for s in series}
    out = []
    for a, b in itertools.combinations(sorted(daily), 2):
        shared = sorted(daily[a].keys() & daily[b].keys())
        if len(shared) < min_pairs:
            continue
        x = np.array([daily[a][d] for d in shared])
        y = np.array([daily[b][d] for d in shared])
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        r = float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))
        out.append(CorrelationPair(a, b, len(shared), r))
    out.sort(key=lambda p: (-p.r, p.site_a, p.site_b))
    return out


def collection_day_histogram(series: List[SiteSeries], split_date: dt.date) -> Tuple[np.ndarray, np.ndarray]:
    """Day-of-month counts (index 0 is day 1) before and from ``split_date``."""
    before = np.zeros(31, dtype=int)
    after = np.zeros(31, dtype=int)
    for s in series:
        for x in s.samples:
            (before if x.date < split_date else after)[x.date.day - 1] += 1
    return before, after
