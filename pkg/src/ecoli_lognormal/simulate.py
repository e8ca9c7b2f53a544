"""
Monte Carlo experiments comparing percentile and parametric estimates.

Replications are drawn in fixed-size chunks; chunk ``i`` always uses the
``i``-th child of the master :class:`numpy.random.SeedSequence`, so results
are bit-identical for a given seed whatever the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional

import numpy as np
from scipy import stats

from . import criteria as cr
from .estimation import LogNormalParams, alpha_factor, hazen_percentile, impute_fixed_point, _constant_fit
from .trend import ols_line, trend_se

CHUNK = 10_000
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class ScenarioSpec:
    """True site state and sampling design for an experiment.

    Give either ``mu``/``sigma`` (log counts) or ``median``/``p95`` (counts).
    """

    mu: Optional[float] = None
    sigma: Optional[float] = None
    median: Optional[float] = None
    p95: Optional[float] = None
    trend: float = 0.0
    per_year: float = 12
    years: float = 5
    replications: int = 100_000
    seed: Optional[int] = None
    censor_above: Optional[float] = None
    unbiased: bool = False

    def __post_init__(self):
        by_params = self.mu is not None and self.sigma is not None
        by_counts = self.median is not None and self.p95 is not None
        if by_params == by_counts:
            raise ValueError("give exactly one of (mu, sigma) or (median, p95)")
        if by_counts and not (0 < self.median <= self.p95):
            raise ValueError("need 0 < median <= p95")
        if by_params and self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.per_year <= 0 or self.years <= 0:
            raise ValueError("per_year and years must be positive")
        if self.n_samples < 2:
            raise ValueError("scenario yields fewer than 2 samples")
        if self.censor_above is not None and self.censor_above <= 0:
            raise ValueError("censor_above must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def n_samples(self) -> int:
        return int(round(self.per_year * self.years))

    @property
    def params(self):
        if self.mu is not None:
            return float(self.mu), float(self.sigma)
        p = LogNormalParams.from_median_p95(self.median, self.p95)
        return p.mu, p.sigma


def _chunks(spec: ScenarioSpec):
    if spec.seed is None:
        raise ValueError("a seed is required")
    count = -(-spec.replications // CHUNK)
    children = np.random.SeedSequence(spec.seed).spawn(count)
    sizes = [CHUNK] * (count - 1) + [spec.replications - CHUNK * (count - 1)]
    return list(zip(children, sizes))


def _run_chunks(work, spec, workers):
    chunks = _chunks(spec)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: work(*c), chunks))
    else:
        parts = [work(*c) for c in chunks]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _censor(logs, censor_above):
    kinds = np.zeros(logs.shape, dtype=int)
    if censor_above is not None:
        b = math.log(censor_above)
        kinds[logs > b] = 1
        logs = np.where(kinds > 0, b, logs)
    return logs, kinds


def _fit_batch(logs, kinds):
    if kinds.any():
        y, loc, sd, _, converged = impute_fixed_point(logs, kinds, _constant_fit)
        if not converged:
            raise RuntimeError("batched imputation did not converge")
        return loc[..., 0], sd
    return logs.mean(axis=-1), logs.std(axis=-1, ddof=1)


def _percentile_categories(logs, kinds, thresholds):
    p50 = np.exp(hazen_percentile(logs, 0.5))
    p95 = np.exp(hazen_percentile(logs, 0.95))
    cats = np.maximum(cr.band_array("P50", p50, thresholds), cr.band_array("P95", p95, thresholds))
    for crit, T in (("G540", thresholds.g540_threshold), ("G260", thresholds.g260_threshold)):
        t = math.log(T)
        above = (logs > t) | ((kinds > 0) & (logs >= t))
        cats = np.maximum(cats, cr.band_array(crit, above.mean(axis=-1), thresholds))
    return cats


def rate_se(rate: float, replications: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / replications)


@dataclass(frozen=True)
class MethodSummary:
    method: str
    mean: float            # of the P95 estimate, counts
    sd: float
    log_mean: float
    log_sd: float
    quantiles: Dict[str, float]
    pass_rate: float       # estimate <= threshold
    pass_se: float
    false_pass: float
    false_fail: float
    misclassified: float   # category differs from the true category
    misclassified_se: float
    categories: Dict[str, int]


@dataclass
class SimulationReport:
    spec: ScenarioSpec
    threshold: float
    true_p95: float
    true_category: str
    replications: int
    methods: Dict[str, MethodSummary]
    predicted_parametric_pass: float
    estimates: Dict[str, np.ndarray] = field(repr=False, compare=False, default=None)

    def confusion_matrix(self) -> Dict[str, List[List[int]]]:
        """Rows: true category A..E; columns: estimated category, per method."""
        out = {}
        for name, m in self.methods.items():
            mat = [[0] * 5 for _ in range(5)]
            row = cr.Category[self.true_category]
            for c, k in m.categories.items():
                mat[row][cr.Category[c]] = k
            out[name] = mat
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "state",
            "spec": self.spec.to_dict(),
            "threshold": self.threshold,
            "true_p95": self.true_p95,
            "true_category": self.true_category,
            "replications": self.replications,
            "predicted_parametric_pass": self.predicted_parametric_pass,
            "methods": {k: asdict(v) for k, v in self.methods.items()},
            "confusion": self.confusion_matrix(),
        }

    def histogram(self, bins: int = 60) -> List[dict]:
        """Density of P95 estimates per method on a shared log-spaced grid."""
        allv = np.concatenate(list(self.estimates.values()))
        edges = np.linspace(allv.min(), allv.max(), bins + 1)
        rows = []
        for name, v in self.estimates.items():
            dens, _ = np.histogram(v, edges, density=True)
            for lo, hi, d in zip(edges[:-1], edges[1:], dens):
                rows.append({"method": name, "bin_lo": math.exp(lo), "bin_hi": math.exp(hi), "density_log": d})
        return rows


def predicted_pass_rate(mu: float, sigma: float, n: int, threshold: float, p: float = 0.95,
                        scale: float = 1.0) -> float:
    """Exact ``P(xbar + scale * z_p * s <= log threshold)`` for normal log data.

    ``(xbar - c) sqrt(n) / s`` is noncentral t with n - 1 degrees of freedom.
    """
    z = cr.z_value(p)
    c = math.log(threshold)
    if sigma == 0:
        return float(mu + 0 <= c)
    nc = (mu - c) * math.sqrt(n) / sigma
    return float(stats.nct.cdf(-scale * z * math.sqrt(n), n - 1, nc))


def run_state_experiment(spec: ScenarioSpec, threshold: float = 1200.0,
                         thresholds: cr.CriteriaThresholds = cr.DEFAULT_THRESHOLDS,
                         workers: int = 1) -> SimulationReport:
    """Sampling distribution of the P95 estimate by both methods for a steady site."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if spec.trend != 0:
        raise ValueError("state experiments assume no trend")
    mu, sigma = spec.params
    n = spec.n_samples
    z95 = cr.z_value(0.95)
    scale = alpha_factor(n) if spec.unbiased else 1.0

    def work(seq, size):
        rng = np.random.default_rng(seq)
        logs = mu + sigma * rng.standard_normal((size, n))
        logs, kinds = _censor(logs, spec.censor_above)
        m_hat, s_hat = _fit_batch(logs, kinds)
        return {
            "percentile": hazen_percentile(logs, 0.95),
            "parametric": m_hat + scale * z95 * s_hat,
            "cat_percentile": _percentile_categories(logs, kinds, thresholds),
            "cat_parametric": cr.classify_parametric_array(m_hat, s_hat, thresholds),
        }

    res = _run_chunks(work, spec, workers)
    true_log = mu + z95 * sigma
    true_cat = cr.classify_parametric(mu, sigma, thresholds=thresholds)
    log_t = math.log(threshold)
    R = spec.replications
    methods = {}
    for name in ("percentile", "parametric"):
        v = res[name]
        counts = np.exp(v)
        passed = float(np.mean(v <= log_t))
        cats = res["cat_" + name]
        mis = float(np.mean(cats != int(true_cat)))
        methods[name] = MethodSummary(
            method=name,
            mean=float(counts.mean()), sd=float(counts.std(ddof=1)) if R > 1 else 0.0,
            log_mean=float(v.mean()), log_sd=float(v.std(ddof=1)) if R > 1 else 0.0,
            quantiles={f"{q:g}": float(np.exp(np.quantile(v, q))) for q in QUANTILES},
            pass_rate=passed, pass_se=rate_se(passed, R),
            false_pass=passed if true_log > log_t else 0.0,
            false_fail=1.0 - passed if true_log <= log_t else 0.0,
            misclassified=mis, misclassified_se=rate_se(mis, R),
            categories={c.name: int(np.sum(cats == int(c))) for c in cr.Category},
        )
    return SimulationReport(
        spec=spec, threshold=threshold, true_p95=math.exp(true_log), true_category=true_cat.name,
        replications=R, methods=methods,
        predicted_parametric_pass=predicted_pass_rate(mu, sigma, n, threshold, scale=scale),
        estimates={k: res[k] for k in ("percentile", "parametric")},
    )


@dataclass
class TrendSimulationReport:
    spec: ScenarioSpec
    replications: int
    slope_mean: float
    slope_sd: float
    slope_sd_se: float
    se_closed_form: float
    se_exact: float
    mean_fitted_se: float
    detection: Dict[str, float]      # |z| >= k
    improving: Dict[str, float]      # z <= -k
    deteriorating: Dict[str, float]  # z >= k
    predicted_detection: Dict[str, float]
    slopes: np.ndarray = field(repr=False, compare=False, default=None)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("spec", "slopes")}
        d["spec"] = self.spec.to_dict()
        d["kind"] = "trend"
        d["detection_se"] = {k: rate_se(v, self.replications) for k, v in self.detection.items()}
        return d

    def histogram(self, bins: int = 60) -> List[dict]:
        dens, edges = np.histogram(self.slopes, bins, density=True)
        return [{"method": "ols", "bin_lo": lo, "bin_hi": hi, "density": d}
                for lo, hi, d in zip(edges[:-1], edges[1:], dens)]


def run_trend_experiment(spec: ScenarioSpec, workers: int = 1, levels=(1, 2, 3)) -> TrendSimulationReport:
    """Fitted slopes and detection rates for evenly spaced samples."""
    mu, sigma = spec.params
    n = spec.n_samples
    t = np.arange(n) / spec.per_year
    if n < 3:
        raise ValueError("trend experiments need at least 3 samples")
    sxx = float(np.sum((t - t.mean()) ** 2))

    def work(seq, size):
        rng = np.random.default_rng(seq)
        logs = mu + spec.trend * t + sigma * rng.standard_normal((size, n))
        logs, kinds = _censor(logs, spec.censor_above)
        if kinds.any():
            def line(y):
                b0, b1, sd = ols_line(t, y)
                return b0[..., None] + b1[..., None] * t, sd
            logs, _, _, _, ok = impute_fixed_point(logs, kinds, line)
            if not ok:
                raise RuntimeError("batched trend imputation did not converge")
        _, b1, sd = ols_line(t, logs)
        return {"slope": b1, "se": sd / math.sqrt(sxx)}

    res = _run_chunks(work, spec, workers)
    m, se = res["slope"], res["se"]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, m / np.where(se > 0, se, 1.0), np.sign(m) * np.inf)
    z = np.nan_to_num(z, nan=0.0)
    R = spec.replications
    se_exact = sigma / math.sqrt(sxx)
    predicted = {}
    for k in levels:
        if sigma == 0:
            predicted[str(k)] = float(spec.trend != 0)
        else:
            nc = spec.trend / se_exact
            predicted[str(k)] = float(stats.nct.sf(k, n - 2, nc) + stats.nct.cdf(-k, n - 2, nc))
    sd = float(m.std(ddof=1)) if R > 1 else 0.0
    return TrendSimulationReport(
        spec=spec, replications=R,
        slope_mean=float(m.mean()), slope_sd=sd, slope_sd_se=sd / math.sqrt(2 * max(R - 1, 1)),
        se_closed_form=trend_se(sigma, spec.years, spec.per_year), se_exact=se_exact,
        mean_fitted_se=float(se.mean()),
        detection={str(k): float(np.mean(np.abs(z) >= k)) for k in levels},
        improving={str(k): float(np.mean(z <= -k)) for k in levels},
        deteriorating={str(k): float(np.mean(z >= k)) for k in levels},
        predicted_detection=predicted,
        slopes=m,
    )


@dataclass(frozen=True)
class Ellipse:
    mu: float
    sigma: float
    semi_mu: float
    semi_sigma: float
    k: float
    coverage: float

    def boundary(self, num: int = 101) -> np.ndarray:
        a = np.linspace(0, 2 * np.pi, num)
        return np.column_stack([self.mu + self.semi_mu * np.cos(a), self.sigma + self.semi_sigma * np.sin(a)])


def confidence_ellipse(params: LogNormalParams, coverage: float = 0.67) -> Ellipse:
    """Axis-aligned joint confidence region for ``(mu, sigma)``.

    Semi-axes are ``k * se_mu`` and ``k * se_sigma`` with ``k**2`` the
    chi-square(2) quantile at ``coverage``.
    """
    if not 0 < coverage < 1:
        raise ValueError("coverage must lie in (0, 1)")
    k = math.sqrt(stats.chi2.ppf(coverage, 2))
    return Ellipse(params.mu, params.sigma, k * params.se_mu, k * params.se_sigma, k, coverage)
