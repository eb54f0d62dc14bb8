"""Regression metrics and the bootstrap interval used by the benchmark."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["r2_score", "mse", "mae", "bootstrap_median_ci"]


def r2_score(y_true, y_pred) -> float:
    """Coefficient of determination; nan when undefined or predictions blow up."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0 or not np.all(np.isfinite(y_pred)):
        return math.nan
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


def mse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.mean((y_true - y_pred) ** 2))


def mae(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    return float(np.mean(np.abs(y_true - y_pred)))


def bootstrap_median_ci(
    values, n_boot: int = 1000, confidence: float = 0.95, seed: int = 0
) -> tuple[float, float, float]:
    """Median with a percentile bootstrap confidence interval.

    Returns (median, lo, hi); deterministic for a fixed seed.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan, math.nan
    rng = np.random.default_rng(seed)
    resamples = rng.integers(0, values.size, size=(n_boot, values.size))
    medians = np.median(values[resamples], axis=1)
    alpha = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(medians, [alpha, 1.0 - alpha])
    return float(np.median(values)), float(lo), float(hi)
