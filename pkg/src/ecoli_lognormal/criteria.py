"""
Swimmability criteria for river E. coli and their form in (mu, sigma) space.

The four attribute criteria (median, 95th percentile, and the fractions of
samples above 260 and 540 per 100 mL) are evaluated either on empirical
statistics of a sample series or on the parameters of a lognormal model
``log(count) ~ N(mu, sigma)``. Under the lognormal model every criterion is
a half-plane ``mu + z * sigma <= log(threshold)``, so each category is a
convex polygon in parameter space.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats


class Category(IntEnum):
    """Swimmability category; larger is dirtier."""

    A = 0
    B = 1
    C = 2
    D = 3
    E = 4

    @property
    def colour(self) -> str:
        return ("Blue", "Green", "Yellow", "Orange", "Red")[self.value]

    @property
    def swimmable(self) -> bool:
        return self <= Category.C

    @classmethod
    def parse(cls, label: str) -> "Category":
        label = label.strip()
        for cat in cls:
            if label.upper() == cat.name or label.lower() == cat.colour.lower():
                return cat
        raise ValueError(f"unknown category {label!r}")

    def __str__(self) -> str:
        return self.name


CRITERIA = ("P50", "P95", "G540", "G260")

# z-values printed alongside the criteria; computed values drive classification.
Z_TABLE = {0.5: 0.0, 0.66: 0.412, 0.7: 0.524, 0.8: 0.842, 0.9: 1.282, 0.95: 1.645}


def z_value(p: float) -> float:
    """Standard normal quantile ``Phi^{-1}(p)``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return float(stats.norm.ppf(p))


@dataclass(frozen=True)
class CriteriaThresholds:
    """Count thresholds (per 100 mL) and exceedance-fraction bounds.

    Each criterion is a list of upper bounds ordered cleanest first together
    with the category admitted by each bound; values above the last bound
    fall into ``*_worst``.
    """

    median_bounds: Tuple[float, ...] = (130.0, 260.0)
    median_bands: Tuple[Category, ...] = (Category.A, Category.D)
    median_worst: Category = Category.E
    p95_bounds: Tuple[float, ...] = (540.0, 1000.0, 1200.0)
    p95_bands: Tuple[Category, ...] = (Category.A, Category.B, Category.C)
    p95_worst: Category = Category.D
    g540_threshold: float = 540.0
    g540_fractions: Tuple[float, ...] = (0.05, 0.10, 0.20, 0.30)
    g540_bands: Tuple[Category, ...] = (Category.A, Category.B, Category.C, Category.D)
    g540_worst: Category = Category.E
    g260_threshold: float = 260.0
    g260_fractions: Tuple[float, ...] = (0.20, 0.34, 0.50)
    g260_bands: Tuple[Category, ...] = (Category.A, Category.B, Category.D)
    g260_worst: Category = Category.E
    min_p95_samples: int = 60

    def __post_init__(self):
        for bounds in (self.median_bounds, self.p95_bounds):
            if any(b <= 0 for b in bounds) or list(bounds) != sorted(set(bounds)):
                raise ValueError(f"count bounds must be positive and increasing: {bounds}")
        if self.g540_threshold <= 0 or self.g260_threshold <= 0:
            raise ValueError("exceedance thresholds must be positive")
        for fracs in (self.g540_fractions, self.g260_fractions):
            if any(not 0 < f < 1 for f in fracs) or list(fracs) != sorted(set(fracs)):
                raise ValueError(f"fraction bounds must be increasing in (0, 1): {fracs}")
        pairs = [
            (self.median_bounds, self.median_bands),
            (self.p95_bounds, self.p95_bands),
            (self.g540_fractions, self.g540_bands),
            (self.g260_fractions, self.g260_bands),
        ]
        for bounds, bands in pairs:
            if len(bounds) != len(bands):
                raise ValueError("each bound needs exactly one band")

    @classmethod
    def from_dict(cls, data: dict) -> "CriteriaThresholds":
        kwargs = {}
        for key, value in data.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown threshold field {key!r}")
            if key.endswith("_bands"):
                value = tuple(Category.parse(v) if isinstance(v, str) else Category(v) for v in value)
            elif key.endswith("_worst"):
                value = Category.parse(value) if isinstance(value, str) else Category(value)
            elif isinstance(value, list):
                value = tuple(float(v) for v in value)
            kwargs[key] = value
        return cls(**kwargs)

    def table(self, criterion: str) -> Tuple[Tuple[float, ...], Tuple[Category, ...], Category]:
        """Bounds, admitted bands and fallback band of one criterion."""
        if criterion == "P50":
            return self.median_bounds, self.median_bands, self.median_worst
        if criterion == "P95":
            return self.p95_bounds, self.p95_bands, self.p95_worst
        if criterion == "G540":
            return self.g540_fractions, self.g540_bands, self.g540_worst
        if criterion == "G260":
            return self.g260_fractions, self.g260_bands, self.g260_worst
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")


DEFAULT_THRESHOLDS = CriteriaThresholds()


@dataclass(frozen=True)
class CriterionHalfPlane:
    """``mu + z * sigma <= bound`` admits ``category`` for ``criterion``."""

    z: float
    bound: float
    criterion: str
    category: Category

    def contains(self, mu, sigma):
        return mu + self.z * sigma <= self.bound

    def mu_limit(self, sigma):
        return self.bound - self.z * sigma


@dataclass(frozen=True)
class EmpiricalStats:
    """Percentile-method statistics of one series (counts per 100 mL)."""

    p50: float
    p95: float
    frac260: float
    frac540: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("EmpiricalStats needs n >= 1")


def band_for_criterion(criterion: str, value: float,
                       thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> Category:
    """Cleanest category whose bound for ``criterion`` admits ``value``.

    ``value`` is a count for P50/P95 and an exceedance fraction for
    G260/G540. Values equal to a bound take the cleaner band.
    """
    bounds, bands, worst = thresholds.table(criterion)
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"value must be finite and non-negative, got {value}")
    for bound, band in zip(bounds, bands):
        if value <= bound:
            return band
    return worst


def band_array(criterion: str, values,
               thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> np.ndarray:
    """Vectorised :func:`band_for_criterion`; returns integer category codes."""
    bounds, bands, worst = thresholds.table(criterion)
    lookup = np.array([int(b) for b in bands] + [int(worst)])
    idx = np.searchsorted(np.asarray(bounds, dtype=float), np.asarray(values, dtype=float), side="left")
    return lookup[idx]


def criterion_bands(es: EmpiricalStats, drop_p95: bool = False,
                    thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> Dict[str, Category]:
    values = {"P50": es.p50, "P95": es.p95, "G540": es.frac540, "G260": es.frac260}
    if drop_p95 and es.n < thresholds.min_p95_samples:
        del values["P95"]
    return {c: band_for_criterion(c, v, thresholds) for c, v in values.items()}


def classify_percentile(es: EmpiricalStats, drop_p95: bool = False,
                        thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> Category:
    """Worst per-criterion band of the empirical statistics.

    With ``drop_p95`` set, the P95 criterion is skipped for series shorter
    than ``thresholds.min_p95_samples``.
    """
    return max(criterion_bands(es, drop_p95, thresholds).values())


def half_planes(thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> List[CriterionHalfPlane]:
    """Every criterion bound as a half-plane in (mu, sigma), cleanest first per criterion."""
    return list(_half_planes(thresholds))


@functools.lru_cache(maxsize=32)
def _half_planes(thresholds: CriteriaThresholds) -> Tuple[CriterionHalfPlane, ...]:
    planes = []
    for criterion in CRITERIA:
        bounds, bands, _ = thresholds.table(criterion)
        for bound, band in zip(bounds, bands):
            if criterion == "P50":
                z, c = 0.0, math.log(bound)
            elif criterion == "P95":
                z, c = z_value(0.95), math.log(bound)
            else:
                # fraction above T at most f  <=>  (1 - f) quantile at most T
                T = thresholds.g540_threshold if criterion == "G540" else thresholds.g260_threshold
                z, c = z_value(1.0 - bound), math.log(T)
                if bound == 0.5:
                    z = 0.0
            planes.append(CriterionHalfPlane(z, c, criterion, band))
    return tuple(planes)


def _planes_by_criterion(thresholds):
    out = {c: [] for c in CRITERIA}
    for plane in half_planes(thresholds):
        out[plane.criterion].append(plane)
    return out


def parametric_bands(mu: float, sigma: float,
                     thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> Dict[str, Category]:
    if not (math.isfinite(mu) and math.isfinite(sigma)):
        raise ValueError(f"parameters must be finite, got mu={mu}, sigma={sigma}")
    if sigma < 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    bands = {}
    for criterion, planes in _planes_by_criterion(thresholds).items():
        worst = thresholds.table(criterion)[2]
        bands[criterion] = next((p.category for p in planes if p.contains(mu, sigma)), worst)
    return bands


def classify_parametric(params, sigma: float = None,
                        thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> Category:
    """Category of a lognormal state.

    ``params`` is either an object with ``mu``/``sigma`` attributes or the
    value of ``mu`` with ``sigma`` given separately.
    """
    if sigma is None:
        mu, sigma = params.mu, params.sigma
    else:
        mu = params
    return max(parametric_bands(mu, sigma, thresholds).values())


def classify_parametric_array(mu, sigma,
                              thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> np.ndarray:
    """Vectorised :func:`classify_parametric` returning integer category codes."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros(np.broadcast(mu, sigma).shape, dtype=int)
    for criterion, planes in _planes_by_criterion(thresholds).items():
        worst = thresholds.table(criterion)[2]
        lookup = np.array([int(p.category) for p in planes] + [int(worst)])
        # planes of one criterion are nested, so the violation count indexes the band
        violated = sum((mu + p.z * sigma > p.bound).astype(int) for p in planes)
        out = np.maximum(out, lookup[violated])
    return out


# --- geometry ---------------------------------------------------------------

@dataclass(frozen=True)
class FrontierSegment:
    """Straight piece of the boundary between two adjacent categories."""

    lower: Category
    upper: Category
    criterion: str
    sigma_start: float
    sigma_end: float
    mu_start: float
    mu_end: float


@dataclass(frozen=True)
class CategoryPolygon:
    """Region of one category over a sigma range.

    ``left`` holds the frontier segments shared with cleaner categories and
    ``right`` those shared with dirtier ones (both ordered by sigma). A
    missing side is unbounded in mu.
    """

    category: Category
    left: Tuple[FrontierSegment, ...] = field(default_factory=tuple)
    right: Tuple[FrontierSegment, ...] = field(default_factory=tuple)

    @property
    def segments(self) -> Tuple[FrontierSegment, ...]:
        return self.left + self.right

    def vertices(self, mu_min: float, mu_max: float, sigma_range: Tuple[float, float]) -> np.ndarray:
        """Closed polygon clipped to ``[mu_min, mu_max]`` for plotting."""
        lo, hi = sigma_range
        right = _trace(self.right, lo, hi, mu_max)
        left = _trace(self.left, lo, hi, mu_min)
        pts = np.vstack([left, right[::-1]])
        return np.vstack([pts, pts[:1]])


def _trace(segments, lo, hi, default_mu):
    if not segments:
        return np.array([[default_mu, lo], [default_mu, hi]])
    pts = []
    for s in segments:
        pts.append((s.mu_start, s.sigma_start))
        pts.append((s.mu_end, s.sigma_end))
    return np.array(pts)


_TIE_ORDER = {c: i for i, c in enumerate(("P50", "P95", "G540", "G260"))}


def _category_limits(sigma: float, thresholds) -> List[Tuple[float, str]]:
    """``mu_k(sigma)`` for k = A..D: largest mu still in category <= k, with the binding criterion."""
    by_crit = _planes_by_criterion(thresholds)
    limits = []
    for k in list(Category)[:-1]:
        best = (math.inf, "")
        for criterion, planes in by_crit.items():
            admitting = [p for p in planes if p.category <= k]
            if not admitting or thresholds.table(criterion)[2] <= k:
                continue
            # the loosest admitting plane of this criterion
            mu_lim = max(p.mu_limit(sigma) for p in admitting)
            cand = (mu_lim, criterion)
            if mu_lim < best[0] - 1e-12 or (
                abs(mu_lim - best[0]) <= 1e-12 and _TIE_ORDER[criterion] < _TIE_ORDER.get(best[1], 99)
            ):
                best = cand
        limits.append(best)
    return limits


def _breakpoints(lo: float, hi: float, thresholds) -> List[float]:
    planes = half_planes(thresholds)
    pts = {lo, hi}
    for i, p in enumerate(planes):
        for q in planes[i + 1:]:
            if p.z != q.z:
                s = (p.bound - q.bound) / (p.z - q.z)
                if lo < s < hi:
                    pts.add(s)
    return sorted(pts)


def frontiers_at(sigma: float,
                 thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> List[Tuple[Category, Category, float, str]]:
    """Category transitions along mu at fixed ``sigma``.

    Returns ``(lower, upper, mu, criterion)`` for each boundary crossed as
    mu increases; empty categories are skipped.
    """
    limits = _category_limits(sigma, thresholds)
    out = []
    k = 0
    while k < len(limits):
        mu_k = limits[k][0]
        # categories k+1..j sharing the same limit are empty at this sigma
        j = k
        while j + 1 < len(limits) and abs(limits[j + 1][0] - mu_k) <= 1e-12:
            j += 1
        out.append((Category(k), Category(j + 1), mu_k, limits[j][1]))
        k = j + 1
    return out


def frontier_segments(sigma_range: Tuple[float, float],
                      thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> List[FrontierSegment]:
    """All category frontiers over ``sigma_range`` as exact straight segments.

    Breakpoints are the pairwise intersections of half-plane boundary
    lines, so within each sigma interval every frontier is a single line.
    Consecutive pieces with the same categories and criterion are merged.
    """
    lo, hi = sigma_range
    if not (0 < lo < hi <= 5):
        raise ValueError(f"sigma range must satisfy 0 < lo < hi <= 5, got {sigma_range}")
    bps = _breakpoints(lo, hi, thresholds)
    pieces: List[FrontierSegment] = []
    for s0, s1 in zip(bps[:-1], bps[1:]):
        mid = 0.5 * (s0 + s1)
        for lower, upper, _, crit in frontiers_at(mid, thresholds):
            # the frontier is mu_{upper-1}; evaluate that exact line at both ends
            planes = [p for p in half_planes(thresholds) if p.criterion == crit and p.category <= upper - 1]
            plane = max(planes, key=lambda p: p.mu_limit(mid))
            pieces.append(FrontierSegment(lower, upper, crit, s0, s1,
                                          plane.mu_limit(s0), plane.mu_limit(s1)))
    merged: List[FrontierSegment] = []
    for seg in sorted(pieces, key=lambda s: (s.lower, s.upper, s.sigma_start)):
        prev = merged[-1] if merged else None
        if (prev is not None and (prev.lower, prev.upper, prev.criterion) == (seg.lower, seg.upper, seg.criterion)
                and abs(prev.sigma_end - seg.sigma_start) < 1e-12 and abs(prev.mu_end - seg.mu_start) < 1e-9):
            merged[-1] = FrontierSegment(prev.lower, prev.upper, prev.criterion, prev.sigma_start,
                                         seg.sigma_end, prev.mu_start, seg.mu_end)
        else:
            merged.append(seg)
    return merged


def category_polygons(sigma_range: Tuple[float, float] = (0.2, 3.0),
                      thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> List[CategoryPolygon]:
    """Piecewise-linear region of each category over ``sigma_range``."""
    segs = frontier_segments(sigma_range, thresholds)
    polys = []
    for cat in Category:
        left = tuple(sorted((s for s in segs if s.upper == cat), key=lambda s: s.sigma_start))
        right = tuple(sorted((s for s in segs if s.lower == cat), key=lambda s: s.sigma_start))
        polys.append(CategoryPolygon(cat, left, right))
    return polys


def active_criteria(lower: Category, upper: Category, sigma_range: Tuple[float, float] = (0.2, 3.0),
                    thresholds: CriteriaThresholds = DEFAULT_THRESHOLDS) -> set:
    """Criteria governing the frontier between ``lower`` and ``upper``."""
    return {s.criterion for s in frontier_segments(sigma_range, thresholds)
            if s.lower == lower and s.upper == upper}


def polygon_rows(polygons: Sequence[CategoryPolygon]) -> List[dict]:
    """Flatten polygons to ``category,segment_index,mu,sigma,active_criterion`` rows."""
    rows = []
    for poly in polygons:
        for i, seg in enumerate(poly.segments):
            for mu, sigma in ((seg.mu_start, seg.sigma_start), (seg.mu_end, seg.sigma_end)):
                rows.append({"category": poly.category.name, "segment_index": i,
                             "mu": mu, "sigma": sigma, "active_criterion": seg.criterion})
    return rows
