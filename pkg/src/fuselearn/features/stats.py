"""The 21-statistic battery applied to every base series.

Conventions (pinned so the brute-force oracles are exact):

* variance/std use the n-1 denominator; 0 for a single sample;
* skewness = m3 / m2^1.5 and excess kurtosis = m4 / m2^2 - 3 with biased
  central moments; both 0 when m2 = 0;
* quantiles use linear interpolation at position (n-1) * q;
* zero_cross_rate counts strict sign changes of the mean-centered series
  over the n-1 adjacent pairs;
* autocorr_lag1 is 0 when the centered sum of squares is 0;
* diff features are 0 for a single-sample series.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptySeries
from .vectors import FeatureVector

STAT_FEATURE_NAMES = (
    "count",
    "mean",
    "std",
    "variance",
    "min",
    "max",
    "range",
    "median",
    "q1",
    "q3",
    "iqr",
    "skewness",
    "kurtosis",
    "rms",
    "mean_abs_dev",
    "zero_cross_rate",
    "energy",
    "diff_mean",
    "diff_std",
    "diff_abs_mean",
    "autocorr_lag1",
)


def stat_values(series: np.ndarray) -> dict[str, float]:
    """Compute the statistic battery as a name -> value mapping."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise EmptySeries("cannot compute statistics of an empty series")
    n = x.size
    mean = float(x.mean())
    centered = x - mean
    m2 = float(np.mean(centered**2))
    variance = float(np.var(x, ddof=1)) if n > 1 else 0.0
    q1, median, q3 = (float(v) for v in np.quantile(x, (0.25, 0.5, 0.75)))

    if m2 > 0.0:
        skewness = float(np.mean(centered**3)) / m2**1.5
        kurtosis = float(np.mean(centered**4)) / m2**2 - 3.0
    else:
        skewness = 0.0
        kurtosis = 0.0

    if n > 1:
        prod = centered[:-1] * centered[1:]
        zero_cross_rate = float(np.count_nonzero(prod < 0.0)) / (n - 1)
        denom = float(np.sum(centered**2))
        autocorr_lag1 = float(np.sum(prod)) / denom if denom > 0.0 else 0.0
        d = np.diff(x)
        diff_mean = float(d.mean())
        diff_abs_mean = float(np.abs(d).mean())
        diff_std = float(d.std(ddof=1)) if d.size > 1 else 0.0
    else:
        zero_cross_rate = 0.0
        autocorr_lag1 = 0.0
        diff_mean = diff_std = diff_abs_mean = 0.0

    return {
        "count": float(n),
        "mean": mean,
        "std": float(np.sqrt(variance)),
        "variance": variance,
        "min": float(x.min()),
        "max": float(x.max()),
        "range": float(x.max() - x.min()),
        "median": median,
        "q1": q1,
        "q3": q3,
        "iqr": q3 - q1,
        "skewness": skewness,
        "kurtosis": kurtosis,
        "rms": float(np.sqrt(np.mean(x**2))),
        "mean_abs_dev": float(np.abs(centered).mean()),
        "zero_cross_rate": zero_cross_rate,
        "energy": float(np.sum(x**2)),
        "diff_mean": diff_mean,
        "diff_std": diff_std,
        "diff_abs_mean": diff_abs_mean,
        "autocorr_lag1": autocorr_lag1,
    }


def stat_features(series: np.ndarray, provenance: str = "") -> FeatureVector:
    """The statistic battery as a FeatureVector (names in fixed order)."""
    values = stat_values(series)
    return FeatureVector(
        list(STAT_FEATURE_NAMES),
        np.array([values[n] for n in STAT_FEATURE_NAMES]),
        np.zeros(len(STAT_FEATURE_NAMES), dtype=bool),
        provenance,
    )
