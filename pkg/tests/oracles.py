"""Independent reference implementations used to check the package.

Everything here is deliberately written the slow, obvious way (explicit loops,
no shared code with src/) so a bug in the package cannot hide in its oracle.
"""

from __future__ import annotations

import math


def brute_force_recovery_day(changes, d0, horizon, threshold=-0.1, run_length=3):
    """O(n * run_length) scan: first index ending a fully qualifying run."""
    for end in range(d0 + run_length - 1, d0 + horizon + 1):
        ok = True
        for back in range(run_length):
            value = changes[end - back]
            if math.isnan(value) or value < threshold or end - back < d0:
                ok = False
                break
        if ok:
            return end
    return None


def moran_double_sum(values, neighbor_indices):
    """Row-standardized global Moran's I via the explicit double sum.

    `values` is a list of floats; `neighbor_indices[i]` lists the neighbors of
    observation i (every observation must have at least one).
    """
    n = len(values)
    mean = sum(values) / n
    z = [v - mean for v in values]
    denom = sum(zi * zi for zi in z)
    num = 0.0
    s0 = 0.0
    for i in range(n):
        k = len(neighbor_indices[i])
        for j in neighbor_indices[i]:
            w = 1.0 / k
            num += w * z[i] * z[j]
            s0 += w
    return (n / s0) * num / denom


def gini_pairwise(values):
    """Mean absolute difference over twice the mean: the O(n^2) definition."""
    values = list(values)
    n = len(values)
    mean = sum(values) / n
    total = 0.0
    for a in values:
        for b in values:
            total += abs(a - b)
    return total / (2.0 * n * n * mean)


def quantile_linear(values, p):
    """Linear interpolation between order statistics, independent of numpy."""
    data = sorted(values)
    n = len(data)
    if n == 1:
        return data[0]
    h = (n - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    return data[lo] + (h - lo) * (data[hi] - data[lo])


def seven_term_mean(values, index, half_width=3):
    """Direct truncated-window mean for one position."""
    lo = max(0, index - half_width)
    hi = min(len(values) - 1, index + half_width)
    window = values[lo : hi + 1]
    return sum(window) / len(window)
