"""Parse and validate the five input CSVs and resolve Zip-level data to regions.

All files are UTF-8, comma separated, first row is a header that must match
the documented schema exactly, dates are ISO-8601. Parsers validate every row,
collect all violations, and raise a single ParseError naming the offending
lines, so `accepted + dropped + errored` always reconciles with the data row
count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date

from .errors import ParseError
from .windows import DateWindow

TRIPS_HEADER = ["date", "origin_region", "service_type", "trip_count"]
TRANSACTIONS_HEADER = ["date", "zip", "merchant_type", "amount"]
OVERLAPS_HEADER = ["region", "zip", "overlap_area"]
ADJACENCY_HEADER = ["region_a", "region_b"]
ATTRIBUTES_HEADER = ["region", "flood_fraction", "minority_fraction", "per_capita_income"]


@dataclass(frozen=True)
class TripRecord:
    day: date
    origin_region: str
    service_type: str
    trip_count: int


@dataclass(frozen=True)
class TransactionRecord:
    day: date
    zip_code: str
    merchant_type: str
    amount: float


@dataclass(frozen=True)
class RegionTransaction:
    """A transaction re-keyed from its Zip to one inheriting region."""

    day: date
    region: str
    merchant_type: str
    amount: float


@dataclass(frozen=True)
class OverlapEntry:
    region: str
    zip_code: str
    overlap_area: float


@dataclass(frozen=True)
class RegionAttributes:
    region: str
    flood_fraction: float
    minority_fraction: float
    per_capita_income: float


@dataclass
class ParseResult:
    """Records plus the counters needed for coverage reconciliation."""

    records: list
    accepted: int
    dropped: int
    total_rows: int
    path: str


class _RowReader:
    """Shared CSV scaffolding: header check, line numbers, error collection."""

    def __init__(self, path, expected_header):
        self.path = path
        self.expected_header = expected_header
        self.errors = []
        self.accepted = 0
        self.dropped = 0
        self.total_rows = 0

    def rows(self):
        with open(self.path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(self.path, [(1, "empty file, missing header row")])
            if [h.strip() for h in header] != self.expected_header:
                raise ParseError(
                    self.path,
                    [(1, f"header {header!r} does not match expected {self.expected_header!r}")],
                )
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue  # blank trailing lines are not data rows
                self.total_rows += 1
                if len(row) != len(self.expected_header):
                    self.error(line_no, f"expected {len(self.expected_header)} fields, got {len(row)}")
                    continue
                yield line_no, row

    def error(self, line_no, message):
        self.errors.append((line_no, message))

    def finish(self, records) -> ParseResult:
        if self.errors:
            raise ParseError(
                self.path, self.errors, accepted=self.accepted,
                dropped=self.dropped, total_rows=self.total_rows,
            )
        return ParseResult(
            records=records, accepted=self.accepted,
            dropped=self.dropped, total_rows=self.total_rows, path=str(self.path),
        )


class _DateParser:
    """Memoized ISO date parsing; input files repeat a small set of dates."""

    def __init__(self):
        self._cache = {}

    def __call__(self, text: str) -> date:
        day = self._cache.get(text)
        if day is None:
            day = date.fromisoformat(text)
            self._cache[text] = day
        return day


def _parse_money(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite amount")
    return value


def parse_trips(path, window: DateWindow) -> ParseResult:
    """Parse trips.csv; rows outside `window` are dropped and counted."""
    reader = _RowReader(path, TRIPS_HEADER)
    parse_date = _DateParser()
    records = []
    for line_no, row in reader.rows():
        raw_date, region, service_type, raw_count = (f.strip() for f in row)
        try:
            day = parse_date(raw_date)
        except ValueError:
            reader.error(line_no, f"bad date {raw_date!r}")
            continue
        if not region:
            reader.error(line_no, "empty origin_region")
            continue
        if not service_type:
            reader.error(line_no, "empty service_type")
            continue
        try:
            count = int(raw_count)
        except ValueError:
            reader.error(line_no, f"trip_count {raw_count!r} is not an integer")
            continue
        if count < 0:
            reader.error(line_no, f"negative trip_count {count}")
            continue
        if not window.contains(day):
            reader.dropped += 1
            continue
        reader.accepted += 1
        records.append(TripRecord(day, region, service_type, count))
    return reader.finish(records)


def parse_transactions(path, window: DateWindow) -> ParseResult:
    """Parse transactions.csv; rows outside `window` are dropped and counted."""
    reader = _RowReader(path, TRANSACTIONS_HEADER)
    parse_date = _DateParser()
    records = []
    for line_no, row in reader.rows():
        raw_date, zip_code, merchant_type, raw_amount = (f.strip() for f in row)
        try:
            day = parse_date(raw_date)
        except ValueError:
            reader.error(line_no, f"bad date {raw_date!r}")
            continue
        if not zip_code:
            reader.error(line_no, "empty zip")
            continue
        if not merchant_type:
            reader.error(line_no, "empty merchant_type")
            continue
        try:
            amount = _parse_money(raw_amount)
        except ValueError:
            reader.error(line_no, f"amount {raw_amount!r} is not a number")
            continue
        if amount < 0:
            reader.error(line_no, f"negative amount {amount}")
            continue
        if not window.contains(day):
            reader.dropped += 1
            continue
        reader.accepted += 1
        records.append(TransactionRecord(day, zip_code, merchant_type, amount))
    return reader.finish(records)


def parse_overlaps(path) -> ParseResult:
    """Parse overlaps.csv; (region, zip) pairs must be unique, areas positive."""
    reader = _RowReader(path, OVERLAPS_HEADER)
    records = []
    seen = set()
    for line_no, row in reader.rows():
        region, zip_code, raw_area = (f.strip() for f in row)
        if not region:
            reader.error(line_no, "empty region")
            continue
        if not zip_code:
            reader.error(line_no, "empty zip")
            continue
        try:
            area = float(raw_area)
        except ValueError:
            reader.error(line_no, f"overlap_area {raw_area!r} is not a number")
            continue
        if not math.isfinite(area) or area <= 0:
            reader.error(line_no, f"overlap_area must be positive, got {raw_area}")
            continue
        if (region, zip_code) in seen:
            reader.error(line_no, f"duplicate (region, zip) pair ({region}, {zip_code})")
            continue
        seen.add((region, zip_code))
        reader.accepted += 1
        records.append(OverlapEntry(region, zip_code, area))
    return reader.finish(records)


def parse_adjacency(path) -> ParseResult:
    """Parse adjacency.csv (undirected edge list) into region -> neighbor set."""
    reader = _RowReader(path, ADJACENCY_HEADER)
    neighbors: dict[str, set[str]] = {}
    for line_no, row in reader.rows():
        a, b = (f.strip() for f in row)
        if not a or not b:
            reader.error(line_no, "empty region identifier")
            continue
        if a == b:
            reader.error(line_no, f"self-loop on region {a}")
            continue
        reader.accepted += 1
        neighbors.setdefault(a, set()).add(b)
        neighbors.setdefault(b, set()).add(a)
    return reader.finish(neighbors)


def parse_attributes(path) -> ParseResult:
    """Parse attributes.csv into region -> RegionAttributes."""
    reader = _RowReader(path, ATTRIBUTES_HEADER)
    records: dict[str, RegionAttributes] = {}
    for line_no, row in reader.rows():
        region, raw_flood, raw_minority, raw_income = (f.strip() for f in row)
        if not region:
            reader.error(line_no, "empty region")
            continue
        if region in records:
            reader.error(line_no, f"duplicate region {region}")
            continue
        try:
            flood = float(raw_flood)
            minority = float(raw_minority)
            income = float(raw_income)
        except ValueError:
            reader.error(line_no, "non-numeric attribute value")
            continue
        if not (0.0 <= flood <= 1.0):
            reader.error(line_no, f"flood_fraction {raw_flood} outside [0, 1]")
            continue
        if not (0.0 <= minority <= 1.0):
            reader.error(line_no, f"minority_fraction {raw_minority} outside [0, 1]")
            continue
        if not math.isfinite(income) or income < 0:
            reader.error(line_no, f"per_capita_income {raw_income} must be nonnegative")
            continue
        reader.accepted += 1
        records[region] = RegionAttributes(region, flood, minority, income)
    return reader.finish(records)


def resolve_crosswalk(overlaps: list[OverlapEntry]) -> dict[str, str]:
    """Assign each region the zip with the largest overlap area.

    Ties break to the lexicographically smallest zip, so the result is
    invariant under any permutation of the input entries.
    """
    best: dict[str, OverlapEntry] = {}
    for entry in overlaps:
        current = best.get(entry.region)
        if current is None:
            best[entry.region] = entry
            continue
        if (-entry.overlap_area, entry.zip_code) < (-current.overlap_area, current.zip_code):
            best[entry.region] = entry
    return {region: entry.zip_code for region, entry in sorted(best.items())}


@dataclass
class BroadcastResult:
    records: list[RegionTransaction]
    unmatched_zip_rows: dict[str, int] = field(default_factory=dict)


def broadcast_zip_to_regions(
    transactions: list[TransactionRecord], crosswalk: dict[str, str]
) -> BroadcastResult:
    """Give every region the full transaction stream of its resolved zip.

    Values are inherited whole, not apportioned: if two regions resolve to the
    same zip, both carry that zip's amounts. Transactions whose zip resolves
    no region are counted per zip and emitted nowhere.
    """
    by_zip: dict[str, list[TransactionRecord]] = {}
    for record in transactions:
        by_zip.setdefault(record.zip_code, []).append(record)

    regions_by_zip: dict[str, list[str]] = {}
    for region in sorted(crosswalk):
        regions_by_zip.setdefault(crosswalk[region], []).append(region)

    records = []
    for zip_code in sorted(regions_by_zip):
        for region in regions_by_zip[zip_code]:
            for tx in by_zip.get(zip_code, ()):
                records.append(RegionTransaction(tx.day, region, tx.merchant_type, tx.amount))

    unmatched = {
        zip_code: len(rows)
        for zip_code, rows in sorted(by_zip.items())
        if zip_code not in regions_by_zip
    }
    return BroadcastResult(records=records, unmatched_zip_rows=unmatched)
