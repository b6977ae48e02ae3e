"""Regression metrics: RMSE, MAE, the root error-ratio R, Pearson r, R²,
and max/mean absolute deviation in the target's original units.

All sums go through ``math.fsum`` (exactly rounded), so every metric is
bitwise invariant under permuting both vectors identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.shape != p.shape:
        raise InvalidParameterError(
            f"actual and predicted must have equal length, got {a.shape} vs {p.shape}")
    if a.size == 0:
        raise InvalidParameterError("metrics need at least one sample")
    if not (np.isfinite(a).all() and np.isfinite(p).all()):
        raise InvalidParameterError("metrics need finite inputs")
    return a, p


def rmse(actual, predicted) -> float:
    """Root mean squared error."""
    a, p = _pair(actual, predicted)
    d = a - p
    return math.sqrt(math.fsum(d * d) / a.size)


def mae(actual, predicted) -> float:
    """Mean absolute error."""
    a, p = _pair(actual, predicted)
    return math.fsum(np.abs(a - p)) / a.size


def r_error_ratio(actual, predicted) -> float:
    """Root error-ratio statistic: sqrt(1 - sum((A-P)^2) / sum(A^2)).

    Not the Pearson coefficient; reported alongside the standard
    statistics so comparisons stay unambiguous.  Undefined (raises) when the
    actuals are all zero or the residual power exceeds the signal power.
    """
    a, p = _pair(actual, predicted)
    denom = math.fsum(a * a)
    if denom == 0.0:
        raise InvalidParameterError("r_error_ratio is undefined for all-zero actuals")
    d = a - p
    radicand = 1.0 - math.fsum(d * d) / denom
    if radicand < 0.0:
        raise InvalidParameterError(
            f"r_error_ratio is undefined: residual power exceeds signal power "
            f"(radicand {radicand:.6g} < 0)")
    return math.sqrt(radicand)


def pearson_r(actual, predicted) -> float:
    """Textbook Pearson correlation coefficient."""
    a, p = _pair(actual, predicted)
    if a.size < 2:
        raise InvalidParameterError("pearson_r needs at least two samples")
    am = math.fsum(a) / a.size
    pm = math.fsum(p) / p.size
    da = a - am
    dp = p - pm
    va = math.fsum(da * da)
    vp = math.fsum(dp * dp)
    if va == 0.0 or vp == 0.0:
        raise InvalidParameterError("pearson_r is undefined for zero-variance input")
    return math.fsum(da * dp) / math.sqrt(va * vp)


def r_squared(actual, predicted) -> float:
    """Coefficient of determination about the mean: 1 - SS_res / SS_tot."""
    a, p = _pair(actual, predicted)
    if a.size < 2:
        raise InvalidParameterError("r_squared needs at least two samples")
    am = math.fsum(a) / a.size
    da = a - am
    ss_tot = math.fsum(da * da)
    if ss_tot == 0.0:
        raise InvalidParameterError("r_squared is undefined for zero-variance actuals")
    d = a - p
    return 1.0 - math.fsum(d * d) / ss_tot


def deviation(actual, predicted) -> tuple[float, float]:
    """(max, mean) absolute deviation.  Callers pass values in the target's
    original units; the max is the headline table figure."""
    a, p = _pair(actual, predicted)
    ad = np.abs(a - p)
    return float(ad.max()), math.fsum(ad) / a.size


@dataclass
class MetricReport:
    """All metrics for one (model, split) evaluation."""

    rmse: float
    mae: float
    r_error_ratio: float       # nan when the radicand is negative for a bad fit
    pearson_r: float
    r_squared: float
    deviation_max: float
    deviation_mean: float
    n: int

    CSV_FIELDS = ("rmse", "mae", "r_error_ratio", "pearson_r", "r_squared",
                  "deviation_max", "deviation_mean", "n")

    def csv_row(self) -> str:
        values = [getattr(self, f) for f in self.CSV_FIELDS]
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in values)


@dataclass
class TrainReport:
    """One model variant's comparison-table rows: train and test metrics."""

    method: str
    structure: str
    train: MetricReport
    test: MetricReport


def compute_report(actual, predicted, actual_original=None,
                   predicted_original=None) -> MetricReport:
    """Build a full report.  Deviations use the *_original pair (denormalized
    units) when given, the primary pair otherwise.  A negative r_error_ratio
    radicand becomes nan instead of raising, so reports on poor fits still
    serialize."""
    a, p = _pair(actual, predicted)
    if actual_original is None:
        actual_original, predicted_original = a, p
    try:
        r_ratio = r_error_ratio(a, p)
    except InvalidParameterError:
        r_ratio = math.nan
    dev_max, dev_mean = deviation(actual_original, predicted_original)
    return MetricReport(
        rmse=rmse(a, p),
        mae=mae(a, p),
        r_error_ratio=r_ratio,
        pearson_r=pearson_r(a, p),
        r_squared=r_squared(a, p),
        deviation_max=dev_max,
        deviation_mean=dev_mean,
        n=a.size,
    )


def format_comparison_table(title: str, rows, deviation_unit: str = "") -> str:
    """Aligned text table with columns Method, Structure, RMSE, MAE, Deviation.

    ``rows`` is a sequence of (method, structure, MetricReport).  RMSE and MAE
    print with 4 significant digits; the deviation column is the max absolute
    deviation in original units.
    """
    dev_header = f"Deviation ({deviation_unit})" if deviation_unit else "Deviation"
    header = ["Method", "Structure", "RMSE", "MAE", dev_header]
    table = [header]
    for method, structure, report in rows:
        table.append([
            method,
            structure,
            f"{report.rmse:.4g}",
            f"{report.mae:.4g}",
            f"{report.deviation_max:.4g}",
        ])
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]
    lines = [title]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines)
