"""Service taxonomy and weighted daily activity series.

Each service type maps to an essential or non-essential category and a weight.
A day's measurement for a (region, source, category) key is the weighted sum
of that day's per-type totals. Weights live in a config CSV (percent on disk,
fractions in memory); the bundled default ships with the package.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ParseError, TaxonomyError
from .ingest import RegionTransaction, TripRecord
from .windows import DateWindow

ESSENTIAL = "essential"
NON_ESSENTIAL = "non-essential"
CATEGORIES = (ESSENTIAL, NON_ESSENTIAL)

SOURCE_TRIP = "trip"
SOURCE_TRANSACTION = "transaction"
SOURCES = (SOURCE_TRIP, SOURCE_TRANSACTION)

TAXONOMY_HEADER = ["service_type", "category", "weight_percent"]

POLICY_ERROR = "error"
POLICY_SKIP = "skip-with-warning"


@dataclass(frozen=True)
class TaxonomyEntry:
    category: str
    weight: float  # fraction, not percent


class ServiceTaxonomy:
    """Mapping of service-type code to category and weight fraction."""

    def __init__(self, entries: dict[str, TaxonomyEntry]):
        self._entries = dict(entries)
        # fixed summation order per category for deterministic dot products
        self._codes_by_category = {
            cat: tuple(sorted(c for c, e in self._entries.items() if e.category == cat))
            for cat in CATEGORIES
        }

    def __contains__(self, code: str) -> bool:
        return code in self._entries

    def __getitem__(self, code: str) -> TaxonomyEntry:
        try:
            return self._entries[code]
        except KeyError:
            raise TaxonomyError(f"unknown service type {code!r}") from None

    def codes(self, category: str) -> tuple[str, ...]:
        return self._codes_by_category[category]

    @property
    def entries(self) -> dict[str, TaxonomyEntry]:
        return dict(self._entries)

    def renormalized(self) -> "ServiceTaxonomy":
        """Rescale weights so each category sums to 1."""
        totals = {
            cat: math.fsum(self._entries[c].weight for c in self.codes(cat))
            for cat in CATEGORIES
        }
        entries = {}
        for code, entry in self._entries.items():
            total = totals[entry.category]
            if total <= 0:
                raise TaxonomyError(f"category {entry.category} has zero total weight")
            entries[code] = TaxonomyEntry(entry.category, entry.weight / total)
        return ServiceTaxonomy(entries)


def load_taxonomy(path=None, renormalize: bool = False) -> ServiceTaxonomy:
    """Load a taxonomy CSV; `path=None` loads the bundled default."""
    if path is None:
        ref = resources.files("recovery_track").joinpath("data/taxonomy.csv")
        with resources.as_file(ref) as bundled:
            return load_taxonomy(bundled, renormalize=renormalize)

    entries: dict[str, TaxonomyEntry] = {}
    errors = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TAXONOMY_HEADER:
            raise ParseError(path, [(1, f"header must be {TAXONOMY_HEADER!r}")])
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                errors.append((line_no, f"expected 3 fields, got {len(row)}"))
                continue
            code, category, raw_weight = (f.strip() for f in row)
            if not code:
                errors.append((line_no, "empty service_type"))
                continue
            if category not in CATEGORIES:
                errors.append((line_no, f"category must be one of {CATEGORIES}, got {category!r}"))
                continue
            try:
                weight_percent = float(raw_weight)
            except ValueError:
                errors.append((line_no, f"weight_percent {raw_weight!r} is not a number"))
                continue
            if not math.isfinite(weight_percent) or weight_percent < 0:
                errors.append((line_no, f"weight_percent must be nonnegative, got {raw_weight}"))
                continue
            if code in entries:
                errors.append((line_no, f"duplicate service_type {code!r}"))
                continue
            entries[code] = TaxonomyEntry(category, weight_percent / 100.0)
    if errors:
        raise ParseError(path, errors)
    if not entries:
        raise TaxonomyError(f"{path}: taxonomy has no entries")
    taxonomy = ServiceTaxonomy(entries)
    return taxonomy.renormalized() if renormalize else taxonomy


def classify(service_type: str, taxonomy: ServiceTaxonomy) -> TaxonomyEntry:
    """Look up a service type; unknown codes raise TaxonomyError."""
    return taxonomy[service_type]


def weighted_measurement(values, taxonomy: ServiceTaxonomy, category: str) -> float:
    """Weighted sum of per-type values over one category.

    Terms are added in lexicographic code order so the float result does not
    depend on the mapping's insertion order. Keys outside `category` are an
    error, not a silent skip.
    """
    for code in values:
        entry = taxonomy[code]
        if entry.category != category:
            raise TaxonomyError(
                f"service type {code!r} is {entry.category}, not {category}"
            )
    return math.fsum(taxonomy[code].weight * values[code] for code in sorted(values))


@dataclass
class SeriesSet:
    """Per (region, source, category) daily value arrays over one window."""

    window: DateWindow
    data: dict[tuple[str, str, str], np.ndarray]
    regions: list[str]

    def keys(self):
        return self.data.keys()

    def __getitem__(self, key):
        return self.data[key]


def series_keys(region: str):
    for source in SOURCES:
        for category in CATEGORIES:
            yield (region, source, category)


def build_daily_series(
    trips: list[TripRecord],
    region_transactions: list[RegionTransaction],
    taxonomy: ServiceTaxonomy,
    window: DateWindow,
    regions=None,
    unknown_policy: str = POLICY_ERROR,
):
    """Aggregate records into one daily series per (region, source, category).

    All four series exist for every region in `regions` (default: the union of
    record regions), zero-filled where no activity was recorded. Per-day
    per-type totals are summed with math.fsum, so results are independent of
    record order. Returns (SeriesSet, unknown_code_counts).
    """
    if unknown_policy not in (POLICY_ERROR, POLICY_SKIP):
        raise TaxonomyError(f"unknown_policy must be {POLICY_ERROR!r} or {POLICY_SKIP!r}")

    if regions is None:
        region_set = {t.origin_region for t in trips}
        region_set.update(t.region for t in region_transactions)
        regions = sorted(region_set)
    else:
        regions = sorted(regions)

    unknown: dict[str, int] = {}
    # (region, source, category) -> day index -> code -> [values]
    buckets: dict[tuple[str, str, str], dict[int, dict[str, list[float]]]] = {}

    def add(region, source, day, code, value):
        if code not in taxonomy:
            unknown[code] = unknown.get(code, 0) + 1
            if unknown_policy == POLICY_ERROR:
                raise TaxonomyError(f"unknown service type {code!r} in {source} data")
            return
        category = taxonomy[code].category
        key = (region, source, category)
        buckets.setdefault(key, {}).setdefault(window.index_of(day), {}).setdefault(code, []).append(value)

    for trip in trips:
        add(trip.origin_region, SOURCE_TRIP, trip.day, trip.service_type, float(trip.trip_count))
    for tx in region_transactions:
        add(tx.region, SOURCE_TRANSACTION, tx.day, tx.merchant_type, tx.amount)

    data = {}
    for region in regions:
        for key in series_keys(region):
            values = np.zeros(window.n_days)
            per_day = buckets.get(key)
            if per_day:
                category = key[2]
                for day_index, per_code in per_day.items():
                    totals = {code: math.fsum(vals) for code, vals in per_code.items()}
                    values[day_index] = weighted_measurement(totals, taxonomy, category)
            data[key] = values
    return SeriesSet(window=window, data=data, regions=regions), unknown
