"""Exploratory statistics: global Moran's I, median splits, 2x2 chi-square,
and the Gini index with its Lorenz curve.

Moran's I uses row-standardized binary contiguity weights built from the
adjacency edge list. Inference is analytical under the randomization
assumption, with an optional seeded permutation p-value as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StatsError


# --------------------------------------------------------------------------
# spatial weights


@dataclass(frozen=True)
class SpatialWeights:
    """Row-standardized contiguity weights over a fixed region ordering.

    Regions left without neighbors (after any subsetting) are excluded from
    the statistic and surfaced in `isolated`.
    """

    regions: tuple[str, ...]
    neighbors: dict
    isolated: tuple[str, ...]

    @classmethod
    def from_adjacency(cls, adjacency: dict, include=None) -> "SpatialWeights":
        if include is None:
            universe = set(adjacency)
            for others in adjacency.values():
                universe.update(others)
        else:
            universe = set(include)
        connected = {}
        isolated = []
        for region in sorted(universe):
            within = tuple(sorted(set(adjacency.get(region, ())) & universe))
            if within:
                connected[region] = within
            else:
                isolated.append(region)
        return cls(
            regions=tuple(sorted(connected)),
            neighbors=connected,
            isolated=tuple(isolated),
        )

    def dense(self) -> np.ndarray:
        """Dense row-standardized weight matrix in `regions` order."""
        index = {region: i for i, region in enumerate(self.regions)}
        n = len(self.regions)
        w = np.zeros((n, n))
        for region, others in self.neighbors.items():
            i = index[region]
            share = 1.0 / len(others)
            for other in others:
                w[i, index[other]] = share
        return w


# --------------------------------------------------------------------------
# chi-square machinery (regularized incomplete gamma, no external deps)


def regularized_upper_gamma(s: float, x: float) -> float:
    """Q(s, x) = Gamma(s, x) / Gamma(s), by series or continued fraction."""
    if s <= 0 or x < 0:
        raise StatsError(f"invalid incomplete gamma arguments s={s}, x={x}")
    if x == 0.0:
        return 1.0
    log_prefix = -x + s * math.log(x) - math.lgamma(s)
    if x < s + 1.0:
        # power series for the lower function P(s, x)
        term = 1.0 / s
        total = term
        denom = s
        for _ in range(1000):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        return 1.0 - total * math.exp(log_prefix)
    # modified Lentz continued fraction for Q(s, x)
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(log_prefix) * h


def chi2_sf(statistic: float, dof: int) -> float:
    """Chi-square survival function P(X >= statistic)."""
    if dof < 1:
        raise StatsError(f"dof must be >= 1, got {dof}")
    if statistic < 0:
        raise StatsError(f"statistic must be nonnegative, got {statistic}")
    return regularized_upper_gamma(dof / 2.0, statistic / 2.0)


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


# --------------------------------------------------------------------------
# Moran's I


@dataclass(frozen=True)
class MoranResult:
    i: float
    expected_i: float
    variance: float
    z_score: float
    p_value: float
    n: int
    permutation_p: float | None = None


def morans_i(
    values: dict,
    weights: SpatialWeights,
    permutations: int = 0,
    seed: int = 0,
) -> MoranResult:
    """Global Moran's I with analytical randomization-assumption inference.

    I = (n / S0) * (sum_ij w_ij z_i z_j) / (sum_i z_i^2), z_i = x_i - mean(x).
    The z-score uses E[I] = -1/(n-1) and the randomization variance; the
    two-sided p comes from the normal approximation. `permutations > 0` adds
    a seeded permutation p-value (fraction of shuffles at least as far from
    E[I] as the observed I).
    """
    regions = weights.regions
    n = len(regions)
    if n < 3:
        raise StatsError(f"Moran's I needs at least 3 non-isolated regions, got {n}")
    missing = [r for r in regions if r not in values]
    if missing:
        raise StatsError(f"values missing for regions: {missing[:5]}")

    x = np.array([float(values[r]) for r in regions])
    z = x - x.mean()
    denom = float(z @ z)
    if denom == 0.0:
        raise StatsError("constant field: Moran's I is undefined for zero variance")

    w = weights.dense()
    s0 = float(w.sum())
    num = float(z @ (w @ z))
    i_value = (n / s0) * num / denom

    expected = -1.0 / (n - 1)
    w_sym = w + w.T
    s1 = 0.5 * float((w_sym**2).sum())
    row_plus_col = w.sum(axis=1) + w.sum(axis=0)
    s2 = float((row_plus_col**2).sum())
    b2 = n * float((z**4).sum()) / denom**2
    if n > 3:
        var = (
            n * ((n * n - 3 * n + 3) * s1 - n * s2 + 3 * s0 * s0)
            - b2 * ((n * n - n) * s1 - 2 * n * s2 + 6 * s0 * s0)
        ) / ((n - 1) * (n - 2) * (n - 3) * s0 * s0) - expected * expected
    else:
        var = float("nan")  # the randomization variance needs n >= 4
    if math.isfinite(var) and var > 0:
        z_score = (i_value - expected) / math.sqrt(var)
        p_value = normal_two_sided_p(z_score)
    else:
        z_score = float("nan")
        p_value = float("nan")

    permutation_p = None
    if permutations > 0:
        rng = np.random.default_rng(seed)
        shuffled = np.array([rng.permutation(z) for _ in range(permutations)])
        nums = np.einsum("ij,ij->i", shuffled, shuffled @ w.T)
        i_perm = (n / s0) * nums / denom
        observed_dev = abs(i_value - expected)
        extreme = int(np.count_nonzero(np.abs(i_perm - expected) >= observed_dev))
        permutation_p = (extreme + 1) / (permutations + 1)

    return MoranResult(
        i=i_value,
        expected_i=expected,
        variance=var,
        z_score=z_score,
        p_value=p_value,
        n=n,
        permutation_p=permutation_p,
    )


# --------------------------------------------------------------------------
# median dichotomization and chi-square


def median_value(values) -> float:
    return float(np.quantile(np.asarray(list(values), dtype=float), 0.5))


def dichotomize_by_median(values: dict):
    """1 where the value exceeds the median, else 0 (ties go low).

    Returns (labels, degenerate); a degenerate split means every region landed
    in the same group.
    """
    if len(values) < 2:
        raise StatsError(f"median split needs at least 2 regions, got {len(values)}")
    med = median_value(values.values())
    labels = {region: (1 if value > med else 0) for region, value in values.items()}
    distinct = set(labels.values())
    return labels, len(distinct) == 1


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    table: tuple  # ((n00, n01), (n10, n11)) with rows = first labeling


def chi_square_from_table(table, yates: bool = False) -> ChiSquareResult:
    """Pearson chi-square for a 2x2 count table, dof = 1."""
    (a, b), (c, d) = table
    for cell in (a, b, c, d):
        if cell < 0:
            raise StatsError(f"negative cell count {cell}")
    n = a + b + c + d
    margins = (a + b, c + d, a + c, b + d)
    if any(m == 0 for m in margins):
        raise StatsError("degenerate table: a row or column margin is zero")
    det = a * d - b * c
    if yates:
        adj = max(0.0, abs(det) - n / 2.0)
        statistic = n * adj * adj / math.prod(margins)
    else:
        statistic = n * det * det / math.prod(margins)
    statistic = float(statistic)
    return ChiSquareResult(
        statistic=statistic,
        dof=1,
        p_value=chi2_sf(statistic, 1),
        table=((a, b), (c, d)),
    )


def chi_square_2x2(group_a: dict, group_b: dict, yates: bool = False) -> ChiSquareResult:
    """Association between two binary region labelings over the same regions."""
    if set(group_a) != set(group_b):
        raise StatsError("labelings cover different region sets")
    if not group_a:
        raise StatsError("empty labelings")
    counts = [[0, 0], [0, 0]]
    for region, a_label in group_a.items():
        b_label = group_b[region]
        if a_label not in (0, 1) or b_label not in (0, 1):
            raise StatsError(f"labels must be 0/1, got ({a_label}, {b_label}) for {region}")
        counts[a_label][b_label] += 1
    return chi_square_from_table(counts, yates=yates)


# --------------------------------------------------------------------------
# Gini index and Lorenz curve


@dataclass(frozen=True)
class LorenzCurve:
    points: tuple  # (population share, metric share) pairs, (0,0) .. (1,1)
    gini: float
    n: int


def gini(values) -> LorenzCurve:
    """Gini index sum_ij |x_i - x_j| / (2 n^2 mean) plus the Lorenz points.

    Computed from the sorted values as sum_i (2i - n - 1) x_(i) / (n^2 mean),
    which is the same quantity without the quadratic pairwise loop.
    """
    data = sorted(float(v) for v in values)
    n = len(data)
    if n == 0:
        raise StatsError("gini of an empty collection")
    if any(v < 0 for v in data):
        raise StatsError("gini requires nonnegative values")
    total = math.fsum(data)
    if total <= 0:
        raise StatsError("gini requires a positive mean")
    gini_value = math.fsum((2 * i - n - 1) * v for i, v in enumerate(data, start=1)) / (n * total)

    shares = np.minimum(np.cumsum(data) / total, 1.0)
    shares[-1] = 1.0  # cumulative rounding must not move the endpoint
    points = [(0.0, 0.0)]
    points.extend((i / n, float(shares[i - 1])) for i in range(1, n + 1))
    return LorenzCurve(points=tuple(points), gini=gini_value, n=n)
