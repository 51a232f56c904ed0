"""Pre-event baselines, centered smoothing, and percent change vs baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aggregate import SeriesSet
from .errors import SeriesError
from .windows import DateWindow

DEFAULT_MIN_BASELINE = 1e-9

BOUNDARY_TRUNCATE = "truncate"
BOUNDARY_SKIP = "skip"


@dataclass(frozen=True)
class Baseline:
    value: float
    sufficient: bool


def compute_baseline(
    values: np.ndarray,
    window: DateWindow,
    baseline_window: DateWindow,
    min_baseline: float = DEFAULT_MIN_BASELINE,
) -> Baseline:
    """Mean daily value over the baseline window (missing days count as 0).

    Keys whose mean falls below `min_baseline` are flagged insufficient and
    excluded from every downstream computation that divides by the baseline.
    """
    start = window.index_of(baseline_window.start)
    end = window.index_of(baseline_window.end)
    if start < 0 or end >= len(values):
        raise SeriesError(
            f"baseline window {baseline_window.start}..{baseline_window.end} "
            f"is outside the data window"
        )
    mean = math.fsum(values[start : end + 1]) / baseline_window.n_days
    return Baseline(value=mean, sufficient=mean >= min_baseline)


def moving_average(
    values: np.ndarray, half_width: int = 3, boundary: str = BOUNDARY_TRUNCATE
) -> np.ndarray:
    """Centered moving average over [d - half_width, d + half_width].

    `truncate` averages whatever days exist near the window edges; `skip`
    leaves edge days NaN so they never qualify as recovered.
    """
    if half_width < 0:
        raise SeriesError(f"half_width must be nonnegative, got {half_width}")
    if boundary not in (BOUNDARY_TRUNCATE, BOUNDARY_SKIP):
        raise SeriesError(f"unknown boundary mode {boundary!r}")
    n = len(values)
    if half_width == 0 or n == 0:
        return np.array(values, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(values, dtype=float)))
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - half_width)
        hi = min(n - 1, i + half_width)
        out[i] = (csum[hi + 1] - csum[lo]) / (hi - lo + 1)
    if boundary == BOUNDARY_SKIP:
        out[:half_width] = np.nan
        if half_width > 0:
            out[n - half_width :] = np.nan
    return out


def percent_change(smoothed, baseline: float):
    """(smoothed - baseline) / baseline; requires a positive baseline."""
    if baseline <= 0:
        raise SeriesError(f"baseline must be positive, got {baseline}")
    return (smoothed - baseline) / baseline


def compute_baselines(
    series_set: SeriesSet,
    baseline_window: DateWindow,
    min_baseline: float = DEFAULT_MIN_BASELINE,
) -> dict:
    """Baseline per series key."""
    return {
        key: compute_baseline(series_set[key], series_set.window, baseline_window, min_baseline)
        for key in sorted(series_set.keys())
    }


def build_change_series(
    series_set: SeriesSet,
    baselines: dict,
    half_width: int = 3,
    boundary: str = BOUNDARY_TRUNCATE,
) -> dict:
    """Smoothed percent-change series for every key with a sufficient baseline."""
    changes = {}
    for key in sorted(series_set.keys()):
        baseline = baselines[key]
        if not baseline.sufficient:
            continue
        smoothed = moving_average(series_set[key], half_width=half_width, boundary=boundary)
        changes[key] = percent_change(smoothed, baseline.value)
    return changes
