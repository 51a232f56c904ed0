from __future__ import annotations

import random

import pytest

from conftest import write_csv
from recovery_track.errors import ParseError
from recovery_track.ingest import (
    OverlapEntry,
    broadcast_zip_to_regions,
    parse_adjacency,
    parse_attributes,
    parse_overlaps,
    parse_transactions,
    parse_trips,
    resolve_crosswalk,
)
from recovery_track.windows import DateWindow

WINDOW = DateWindow.from_strings("2017-08-01", "2017-12-25")


def test_parse_trips_maps_fields(tmp_path):
    path = write_csv(
        tmp_path, "trips.csv",
        "date,origin_region,service_type,trip_count\n"
        "2017-08-15,R001,grocery,12\n",
    )
    result = parse_trips(path, WINDOW)
    record = result.records[0]
    assert record.day.isoformat() == "2017-08-15"
    assert record.origin_region == "R001"
    assert record.service_type == "grocery"
    assert record.trip_count == 12
    assert result.accepted == 1 and result.dropped == 0


def test_parse_trips_negative_count_names_line(tmp_path):
    path = write_csv(
        tmp_path, "trips.csv",
        "date,origin_region,service_type,trip_count\n"
        "2017-08-15,R001,grocery,12\n"
        "2017-08-16,R001,grocery,-3\n",
    )
    with pytest.raises(ParseError) as err:
        parse_trips(path, WINDOW)
    assert err.value.row_errors[0][0] == 3
    assert "line 3" in str(err.value)


def test_parse_trips_window_filter_counts(tmp_path):
    rows = ["date,origin_region,service_type,trip_count"]
    rows += [f"2017-08-{10 + i:02d},R001,grocery,{i}" for i in range(8)]
    rows += ["2017-07-30,R001,grocery,1", "2018-01-02,R001,grocery,1"]
    path = write_csv(tmp_path, "trips.csv", "\n".join(rows) + "\n")
    result = parse_trips(path, WINDOW)
    assert result.accepted == 8
    assert result.dropped == 2
    assert result.total_rows == 10


def test_parse_trips_header_mismatch(tmp_path):
    path = write_csv(tmp_path, "trips.csv", "date,region,type,count\n2017-08-15,R001,grocery,1\n")
    with pytest.raises(ParseError):
        parse_trips(path, WINDOW)


def test_parse_transactions_zero_amount_is_valid(tmp_path):
    path = write_csv(
        tmp_path, "transactions.csv",
        "date,zip,merchant_type,amount\n2017-08-15,77005,restaurant,0.00\n",
    )
    result = parse_transactions(path, WINDOW)
    assert result.records[0].amount == 0.0


def test_parse_transactions_keeps_duplicates(tmp_path):
    path = write_csv(
        tmp_path, "transactions.csv",
        "date,zip,merchant_type,amount\n"
        "2017-08-15,77005,restaurant,230.50\n"
        "2017-08-15,77005,restaurant,19.50\n",
    )
    result = parse_transactions(path, WINDOW)
    assert len(result.records) == 2
    assert sum(r.amount for r in result.records) == 250.0


def test_parser_reconciliation_on_random_files(tmp_path):
    rng = random.Random(1234)
    for trial in range(50):
        rows = ["date,origin_region,service_type,trip_count"]
        expect_ok = expect_drop = expect_err = 0
        for _ in range(rng.randrange(1, 40)):
            shape = rng.random()
            if shape < 0.5:
                rows.append("2017-09-01,R001,grocery,5")
                expect_ok += 1
            elif shape < 0.7:
                rows.append("2016-01-01,R001,grocery,5")
                expect_drop += 1
            elif shape < 0.8:
                rows.append("2017-09-01,R001,grocery,-1")
                expect_err += 1
            elif shape < 0.9:
                rows.append("not-a-date,R001,grocery,5")
                expect_err += 1
            else:
                rows.append("2017-09-01,,grocery,5")
                expect_err += 1
        path = write_csv(tmp_path, f"trial{trial}.csv", "\n".join(rows) + "\n")
        total = expect_ok + expect_drop + expect_err
        if expect_err:
            with pytest.raises(ParseError) as err:
                parse_trips(path, WINDOW)
            exc = err.value
            assert exc.accepted + exc.dropped + exc.errored == total
            assert exc.accepted == expect_ok and exc.dropped == expect_drop
        else:
            result = parse_trips(path, WINDOW)
            assert result.accepted + result.dropped == total


# ---------------------------------------------------------------------------
# crosswalk


def test_crosswalk_prefers_largest_area():
    overlaps = [OverlapEntry("R001", "77005", 0.7), OverlapEntry("R001", "77030", 0.3)]
    assert resolve_crosswalk(overlaps) == {"R001": "77005"}


def test_crosswalk_single_entry():
    assert resolve_crosswalk([OverlapEntry("R002", "77005", 1.0)]) == {"R002": "77005"}


def test_crosswalk_tie_breaks_to_smaller_zip():
    overlaps = [OverlapEntry("R003", "77030", 0.5), OverlapEntry("R003", "77005", 0.5)]
    assert resolve_crosswalk(overlaps) == {"R003": "77005"}


def test_crosswalk_invariant_under_permutation():
    rng = random.Random(99)
    overlaps = []
    for r in range(40):
        zips = rng.sample(range(77001, 77060), k=rng.randrange(1, 5))
        for z in zips:
            overlaps.append(OverlapEntry(f"R{r:03d}", str(z), rng.choice([0.1, 0.25, 0.5, 0.5])))
    reference = resolve_crosswalk(overlaps)
    for _ in range(20):
        rng.shuffle(overlaps)
        assert resolve_crosswalk(overlaps) == reference


def test_overlaps_rejects_duplicates_and_nonpositive_area(tmp_path):
    path = write_csv(
        tmp_path, "overlaps.csv",
        "region,zip,overlap_area\nR001,77005,0.5\nR001,77005,0.4\n",
    )
    with pytest.raises(ParseError):
        parse_overlaps(path)
    path = write_csv(tmp_path, "overlaps2.csv", "region,zip,overlap_area\nR001,77005,0\n")
    with pytest.raises(ParseError):
        parse_overlaps(path)


# ---------------------------------------------------------------------------
# broadcast


def _tx(day, zip_code, amount):
    from datetime import date
    from recovery_track.ingest import TransactionRecord

    return TransactionRecord(date.fromisoformat(day), zip_code, "grocery", amount)


def test_broadcast_copies_full_value_to_each_region():
    result = broadcast_zip_to_regions(
        [_tx("2017-08-15", "77005", 100.0)], {"R001": "77005", "R002": "77005"}
    )
    assert len(result.records) == 2
    assert {r.region for r in result.records} == {"R001", "R002"}
    assert all(r.amount == 100.0 for r in result.records)


def test_broadcast_counts_unmatched_zip():
    result = broadcast_zip_to_regions([_tx("2017-08-15", "99999", 5.0)], {"R001": "77005"})
    assert result.records == []
    assert result.unmatched_zip_rows == {"99999": 1}


def test_broadcast_identity_single_pair():
    result = broadcast_zip_to_regions([_tx("2017-08-15", "77005", 7.5)], {"R001": "77005"})
    assert len(result.records) == 1
    assert result.records[0].region == "R001"
    assert result.records[0].amount == 7.5


def test_broadcast_preserves_per_zip_daily_values():
    rng = random.Random(5)
    transactions = []
    for day in range(1, 20):
        for zip_code in ("77001", "77002", "77003"):
            for merchant in ("grocery", "retail"):
                transactions.append(_tx(f"2017-08-{day:02d}", zip_code, rng.uniform(0, 500)))
    crosswalk = {f"R{i:03d}": rng.choice(["77001", "77002", "77003"]) for i in range(12)}
    result = broadcast_zip_to_regions(transactions, crosswalk)
    by_zip = {}
    for tx in transactions:
        by_zip.setdefault((tx.zip_code, tx.day, tx.merchant_type), []).append(tx.amount)
    by_region = {}
    for rec in result.records:
        by_region.setdefault((rec.region, rec.day, rec.merchant_type), []).append(rec.amount)
    for region, zip_code in crosswalk.items():
        for (z, day, merchant), amounts in by_zip.items():
            if z != zip_code:
                continue
            assert sorted(by_region[(region, day, merchant)]) == sorted(amounts)


# ---------------------------------------------------------------------------
# adjacency and attributes


def test_adjacency_symmetric_and_rejects_self_loops(tmp_path):
    path = write_csv(tmp_path, "adjacency.csv", "region_a,region_b\nR001,R002\nR002,R003\n")
    neighbors = parse_adjacency(path).records
    assert neighbors["R001"] == {"R002"}
    assert neighbors["R002"] == {"R001", "R003"}
    bad = write_csv(tmp_path, "bad.csv", "region_a,region_b\nR001,R001\n")
    with pytest.raises(ParseError):
        parse_adjacency(bad)


def test_attributes_validation(tmp_path):
    path = write_csv(
        tmp_path, "attributes.csv",
        "region,flood_fraction,minority_fraction,per_capita_income\n"
        "R001,0.25,0.4,35000\n",
    )
    records = parse_attributes(path).records
    assert records["R001"].flood_fraction == 0.25
    bad = write_csv(
        tmp_path, "bad_attr.csv",
        "region,flood_fraction,minority_fraction,per_capita_income\nR001,1.5,0.4,35000\n",
    )
    with pytest.raises(ParseError):
        parse_attributes(bad)
