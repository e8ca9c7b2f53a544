"""Lognormal state and trend assessment of river E. coli against swimmability criteria."""
from .criteria import (
    Category,
    CriteriaThresholds,
    EmpiricalStats,
    band_for_criterion,
    category_polygons,
    classify_parametric,
    classify_percentile,
)
from .estimation import (
    CensorKind,
    LogNormalParams,
    Sample,
    alpha_factor,
    empirical_stats,
    fit_lognormal,
    hazen_percentile,
    parametric_percentile,
    sampling_coefficients,
)
from .ingest import SiteSeries, parse_records, same_day_correlations
from .simulate import ScenarioSpec, confidence_ellipse, run_state_experiment, run_trend_experiment
from .trend import (
    TrendFit,
    deconvolve_trends,
    fit_trend,
    required_samples,
    significance_tiers,
    state_at,
    trend_se,
)

__version__ = "0.1.0"
