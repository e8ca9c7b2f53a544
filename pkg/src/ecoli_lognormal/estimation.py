"""
Lognormal parameter and percentile estimation from E. coli samples.

Censored readings ("<10", ">9700") are handled by one of three policies:

``impute``
    replace each censored log value by its conditional expectation under the
    current fit, given the side of the bound it lies on, and iterate to a
    fixed point;
``clamp``
    use the bound itself;
``drop``
    discard censored readings.
"""
from __future__ import annotations

import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .criteria import EmpiricalStats, z_value

POLICIES = ("impute", "clamp", "drop")

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
DEFAULT_MAX_CENSORED = 0.5


class CensorKind(enum.IntEnum):
    LEFT = -1
    EXACT = 0
    RIGHT = 1

    @property
    def prefix(self) -> str:
        return {CensorKind.LEFT: "<", CensorKind.EXACT: "", CensorKind.RIGHT: ">"}[self]


@dataclass(frozen=True, order=True)
class Sample:
    """One E. coli reading (count per 100 mL) taken on ``date``.

    For censored readings ``value`` is the reported bound.
    """

    date: dt.date
    value: float
    kind: CensorKind = CensorKind.EXACT

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise ValueError(f"sample value must be positive, got {self.value}")
        if not isinstance(self.date, dt.date):
            raise TypeError(f"date must be a datetime.date, got {type(self.date).__name__}")
        object.__setattr__(self, "kind", CensorKind(self.kind))

    @property
    def censored(self) -> bool:
        return self.kind != CensorKind.EXACT

    @property
    def log_value(self) -> float:
        return math.log(self.value)

    @property
    def token(self) -> str:
        v = self.value
        text = str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
        return self.kind.prefix + text


class CensoringError(ValueError):
    """Too few exact readings, or too large a censored fraction, to fit."""


class ConvergenceError(RuntimeError):
    """The imputation iteration did not reach its tolerance."""


@dataclass(frozen=True)
class LogNormalParams:
    """Fitted ``log(count) ~ N(mu, sigma)`` with large-sample standard errors."""

    mu: float
    sigma: float
    n: int
    censored_count: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise ValueError(f"parameters must be finite, got ({self.mu}, {self.sigma})")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")

    @property
    def se_mu(self) -> float:
        return self.sigma / math.sqrt(self.n)

    @property
    def se_sigma(self) -> float:
        return self.sigma / math.sqrt(2 * self.n)

    @classmethod
    def from_median_p95(cls, median: float, p95: float, n: int = 60) -> "LogNormalParams":
        """Parameters with the given median and 95th percentile counts."""
        mu = math.log(median)
        return cls(mu, (math.log(p95) - mu) / z_value(0.95), n)


@dataclass(frozen=True)
class ImputationResult:
    params: LogNormalParams
    policy: str
    log_values: np.ndarray = field(repr=False)   # values used in the final fit
    censored_index: np.ndarray = field(repr=False)  # positions (in the input) of censored samples
    imputed: np.ndarray = field(repr=False)  # log values substituted for them (empty unless imputed)
    iterations: int = 0
    converged: bool = True


# --- core numerics ----------------------------------------------------------

def inverse_mills(a):
    """``phi(a) / (1 - Phi(a))`` computed without cancellation in the upper tail."""
    a = np.asarray(a, dtype=float)
    log_pdf = -0.5 * a * a - 0.5 * math.log(2 * math.pi)
    return np.exp(log_pdf - special.log_ndtr(-a))


def truncated_normal_mean(loc, scale, log_bound, kind):
    """``E[L | L > log_bound]`` (kind > 0) or ``E[L | L < log_bound]`` (kind < 0)."""
    loc = np.asarray(loc, dtype=float)
    scale = np.asarray(scale, dtype=float)
    kind = np.asarray(kind)
    a = (log_bound - loc) / np.where(scale > 0, scale, 1.0)
    shift = np.where(kind > 0, inverse_mills(a), -inverse_mills(-a))
    out = loc + scale * shift
    # degenerate spread: the conditional mean sits at the bound, or at loc if loc already qualifies
    beyond = np.where(kind > 0, loc > log_bound, loc < log_bound)
    flat = np.where(beyond, loc, log_bound)
    return np.where(scale > 0, out, flat)


def mean_sd(y, axis=-1):
    """Sample mean and SD (n-1 divisor) along ``axis``."""
    mu = np.mean(y, axis=axis)
    sd = np.std(y, axis=axis, ddof=1)
    return mu, sd


def impute_fixed_point(log_values, kinds, fit: Callable, tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER):
    """Iterate censored-value imputation to a fixed point.

    ``log_values`` holds exact log values and the log bounds of censored
    readings; ``kinds`` gives the censoring side (-1, 0, +1), same shape.
    Leading axes are independent series (batched replications). ``fit`` maps
    a completed array to ``(loc, scale)``: ``loc`` broadcastable against it
    (the fitted location of each reading) and ``scale`` with the leading
    shape (the residual SD of each series).

    Returns ``(completed, loc, scale, iterations, converged)``.
    """
    bounds = np.asarray(log_values, dtype=float)
    kinds = np.asarray(kinds)
    mask = kinds != 0
    y = bounds.copy()
    loc, scale = fit(y)
    if not mask.any():
        return y, loc, scale, 0, True
    for it in range(1, max_iter + 1):
        new = truncated_normal_mean(np.broadcast_to(loc, y.shape)[mask],
                                    np.broadcast_to(np.expand_dims(scale, -1), y.shape)[mask],
                                    bounds[mask], kinds[mask])
        delta_vals = np.max(np.abs(new - y[mask]))
        y[mask] = new
        new_loc, new_scale = fit(y)
        delta = max(delta_vals,
                    float(np.max(np.abs(np.asarray(new_loc) - np.asarray(loc)))),
                    float(np.max(np.abs(np.asarray(new_scale) - np.asarray(scale)))))
        loc, scale = new_loc, new_scale
        if delta < tol:
            return y, loc, scale, it, True
    return y, loc, scale, max_iter, False


def _constant_fit(y):
    mu, sd = mean_sd(y)
    return np.expand_dims(mu, -1), sd


# --- public operations ------------------------------------------------------

def _check_policy(policy: str) -> str:
    policy = {"clamp-to-bound": "clamp"}.get(policy, policy)
    if policy not in POLICIES:
        raise ValueError(f"unknown censor policy {policy!r}; expected one of {POLICIES}")
    return policy


def _arrays(samples: Sequence[Sample]):
    logs = np.array([s.log_value for s in samples], dtype=float)
    kinds = np.array([int(s.kind) for s in samples], dtype=int)
    return logs, kinds


def check_censoring(kinds, max_censored_fraction: float = DEFAULT_MAX_CENSORED, min_exact: int = 2):
    kinds = np.asarray(kinds)
    n_exact = int(np.sum(kinds == 0))
    if n_exact < min_exact:
        raise CensoringError(f"need at least {min_exact} exact readings, got {n_exact}")
    frac = 1.0 - n_exact / kinds.size
    if frac > max_censored_fraction:
        raise CensoringError(
            f"censored fraction {frac:.3f} exceeds limit {max_censored_fraction:.3f}"
        )


def fit_lognormal(samples: Sequence[Sample], censor_policy: str = "impute",
                  max_censored_fraction: float = DEFAULT_MAX_CENSORED,
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ImputationResult:
    """Fit ``(mu, sigma)`` of log counts, handling censored readings by policy.

    Under ``impute`` the iteration starts from the clamped values and stops
    when mu, sigma and every imputed value move by less than ``tol``.

    Raises
    ------
    CensoringError
        fewer than two exact readings, or censored fraction above the limit.
    ConvergenceError
        imputation did not converge within ``max_iter`` iterations.
    """
    policy = _check_policy(censor_policy)
    logs, kinds = _arrays(samples)
    check_censoring(kinds, max_censored_fraction)
    censored_index = np.flatnonzero(kinds != 0)
    n_cens = int(censored_index.size)

    if policy == "drop":
        y = logs[kinds == 0]
        mu, sd = mean_sd(y)
        params = LogNormalParams(float(mu), float(sd), int(y.size), 0)
        return ImputationResult(params, policy, y, censored_index, np.empty(0))
    if policy == "clamp":
        mu, sd = mean_sd(logs)
        params = LogNormalParams(float(mu), float(sd), int(logs.size), n_cens)
        return ImputationResult(params, policy, logs, censored_index, np.empty(0))

    y, loc, scale, iterations, converged = impute_fixed_point(logs, kinds, _constant_fit, tol, max_iter)
    if not converged:
        raise ConvergenceError(f"imputation did not converge in {max_iter} iterations")
    params = LogNormalParams(float(np.ravel(loc)[0]), float(scale), int(y.size), n_cens)
    return ImputationResult(params, policy, y, censored_index, y[censored_index].copy(),
                            iterations, converged)


def imputation_step(result: ImputationResult, samples: Sequence[Sample]) -> LogNormalParams:
    """One further update from a converged fit (used to check the fixed point)."""
    logs, kinds = _arrays(samples)
    y = result.log_values.copy()
    mask = kinds != 0
    p = result.params
    y[mask] = truncated_normal_mean(p.mu, p.sigma, logs[mask], kinds[mask])
    mu, sd = mean_sd(y)
    return LogNormalParams(float(mu), float(sd), p.n, p.censored_count)


def hazen_percentile(log_values, p: float, axis: int = -1):
    """Hazen percentile: plotting positions ``(i - 0.5) / n``, linear interpolation.

    Positions outside ``[1, n]`` clamp to the extreme order statistics.
    Works along ``axis`` of an array; the input need not be sorted.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    x = np.sort(np.asarray(log_values, dtype=float), axis=axis)
    n = x.shape[axis]
    if n == 0:
        raise ValueError("hazen_percentile of empty data")
    rank = min(max(p * n + 0.5, 1.0), float(n))
    k = int(math.floor(rank))
    frac = rank - k
    lo = np.take(x, k - 1, axis=axis)
    if frac == 0.0:
        return lo
    hi = np.take(x, k, axis=axis)
    return lo + frac * (hi - lo)


def alpha_factor(n: int) -> float:
    """``alpha(n)`` making ``xbar + alpha * s * z_p`` unbiased for normal data."""
    if n < 2:
        raise ValueError("alpha_factor needs n >= 2")
    h = (n - 1) / 2.0
    return math.sqrt(h) * math.exp(special.gammaln(h) - special.gammaln(n / 2.0))


class PercentileEstimate(NamedTuple):
    value: float      # count per 100 mL
    log_value: float
    se_log: float     # large-sample SE of log_value


def parametric_percentile(params: LogNormalParams, p: float, unbiased: bool = False) -> PercentileEstimate:
    z = z_value(p) if p != 0.5 else 0.0
    scale = alpha_factor(params.n) if unbiased else 1.0
    log_value = params.mu + scale * params.sigma * z
    d = math.sqrt(1.0 + 0.5 * z * z)
    return PercentileEstimate(math.exp(log_value), log_value, d * params.sigma / math.sqrt(params.n))


class SamplingCoefficients(NamedTuple):
    c: float       # SE of the sample percentile, in units of sigma / sqrt(n)
    d: float       # SE of mu + z_p * sigma, same units
    factor: float  # (c / d) ** 2: sample-size ratio for equal precision


def sampling_coefficients(p: float) -> SamplingCoefficients:
    z = z_value(p) if p != 0.5 else 0.0
    density = math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    c = math.sqrt(p * (1 - p)) / density
    d = math.sqrt(1 + 0.5 * z * z)
    return SamplingCoefficients(c, d, (c / d) ** 2)


def _settled(logs, kinds, log_threshold: float):
    """Masks of readings whose value or bound settles ``> threshold`` either way."""
    above = ((kinds >= 0) & (logs > log_threshold)) | ((kinds > 0) & (logs >= log_threshold))
    below = (kinds <= 0) & (logs <= log_threshold)
    return above, below


def empirical_stats(samples: Sequence[Sample], censor_policy: str = "impute",
                    fit: Optional[ImputationResult] = None) -> EmpiricalStats:
    """Hazen P50/P95 and exceedance fractions of 260 and 540.

    Exceedances are counted on all readings whenever the censoring bound
    settles the comparison (``>9700`` always exceeds 540). Readings it leaves
    open use the policy-resolved value, or are left out under ``drop``.
    Imputation needs at least two exact readings; otherwise ``impute`` falls
    back to clamping.
    """
    if len(samples) == 0:
        raise ValueError("empirical_stats of empty sample list")
    policy = _check_policy(censor_policy)
    logs, kinds = _arrays(samples)
    if policy == "impute":
        if fit is None:
            try:
                fit = fit_lognormal(samples, "impute")
            except CensoringError:
                fit = fit_lognormal(samples, "clamp", max_censored_fraction=1.0) if np.sum(kinds == 0) >= 2 else None
        resolved = fit.log_values if fit is not None else logs
    elif policy == "clamp":
        resolved = logs
    else:
        resolved = logs[kinds == 0]
        if resolved.size == 0:
            raise ValueError("no exact readings left after dropping censored values")

    fracs = {}
    for threshold in (260.0, 540.0):
        t = math.log(threshold)
        above, below = _settled(logs, kinds, t)
        if policy == "drop":
            fracs[threshold] = above.sum() / (above.sum() + below.sum())
        else:
            open_ = ~(above | below)
            fracs[threshold] = (above.sum() + np.sum(resolved[open_] > t)) / logs.size
    return EmpiricalStats(
        p50=float(math.exp(hazen_percentile(resolved, 0.5))),
        p95=float(math.exp(hazen_percentile(resolved, 0.95))),
        frac260=float(fracs[260.0]),
        frac540=float(fracs[540.0]),
        n=len(samples),
    )
