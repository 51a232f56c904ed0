from __future__ import annotations

import math
import random
from datetime import date

import pytest

from conftest import write_csv
from recovery_track.aggregate import (
    ESSENTIAL,
    NON_ESSENTIAL,
    POLICY_SKIP,
    build_daily_series,
    classify,
    load_taxonomy,
    weighted_measurement,
)
from recovery_track.errors import TaxonomyError
from recovery_track.ingest import RegionTransaction, TripRecord
from recovery_track.windows import DateWindow

WINDOW = DateWindow.from_strings("2017-08-01", "2017-09-30")

DEFAULT_WEIGHTS = {
    "drug_store": (ESSENTIAL, 0.05),
    "healthcare": (ESSENTIAL, 0.0001),
    "grocery": (ESSENTIAL, 0.947),
    "utilities": (ESSENTIAL, 0.002),
    "self_care": (NON_ESSENTIAL, 0.005),
    "retail": (NON_ESSENTIAL, 0.288),
    "recreation": (NON_ESSENTIAL, 0.076),
    "restaurant": (NON_ESSENTIAL, 0.631),
}


@pytest.fixture(scope="module")
def taxonomy():
    return load_taxonomy()


def test_default_taxonomy_matches_documented_weights(taxonomy):
    for code, (category, weight) in DEFAULT_WEIGHTS.items():
        entry = taxonomy[code]
        assert entry.category == category
        assert entry.weight == pytest.approx(weight, abs=1e-4)


def test_classify_examples(taxonomy):
    assert classify("grocery", taxonomy).category == ESSENTIAL
    assert classify("grocery", taxonomy).weight == pytest.approx(0.947, abs=1e-12)
    assert classify("restaurant", taxonomy).category == NON_ESSENTIAL
    assert classify("restaurant", taxonomy).weight == pytest.approx(0.631, abs=1e-12)
    with pytest.raises(TaxonomyError):
        classify("florist", taxonomy)


def test_weighted_measurement_unit_inputs(taxonomy):
    essential = {c: 100.0 for c, (cat, _) in DEFAULT_WEIGHTS.items() if cat == ESSENTIAL}
    assert weighted_measurement(essential, taxonomy, ESSENTIAL) == pytest.approx(99.91, abs=1e-10)
    zeros = {c: 0.0 for c in essential}
    assert weighted_measurement(zeros, taxonomy, ESSENTIAL) == 0.0


def test_weighted_measurement_identity_weight(tmp_path):
    path = write_csv(
        tmp_path, "taxonomy.csv",
        "service_type,category,weight_percent\nonly_type,essential,100.0\n",
    )
    taxonomy = load_taxonomy(path)
    assert weighted_measurement({"only_type": 42.0}, taxonomy, ESSENTIAL) == 42.0


def test_weighted_measurement_rejects_wrong_category(taxonomy):
    with pytest.raises(TaxonomyError):
        weighted_measurement({"restaurant": 1.0}, taxonomy, ESSENTIAL)


def test_weighted_measurement_linearity(taxonomy):
    rng = random.Random(7)
    codes = [c for c, (cat, _) in DEFAULT_WEIGHTS.items() if cat == NON_ESSENTIAL]
    for _ in range(200):
        values = {c: rng.uniform(0, 1000) for c in codes}
        a = rng.uniform(0, 10)
        scaled = {c: a * v for c, v in values.items()}
        lhs = weighted_measurement(scaled, taxonomy, NON_ESSENTIAL)
        rhs = a * weighted_measurement(values, taxonomy, NON_ESSENTIAL)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_renormalized_weights_sum_to_one(taxonomy):
    renorm = taxonomy.renormalized()
    for category in (ESSENTIAL, NON_ESSENTIAL):
        total = math.fsum(renorm[c].weight for c in renorm.codes(category))
        assert total == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# daily series


def _trip(day, region, code, count):
    return TripRecord(date.fromisoformat(day), region, code, count)


def _tx(day, region, code, amount):
    return RegionTransaction(date.fromisoformat(day), region, code, amount)


def test_single_trip_weights_into_series(taxonomy):
    series_set, unknown = build_daily_series(
        [_trip("2017-08-05", "R001", "grocery", 10)], [], taxonomy, WINDOW
    )
    values = series_set[("R001", "trip", ESSENTIAL)]
    assert values[WINDOW.index_of(date.fromisoformat("2017-08-05"))] == pytest.approx(9.47)
    assert unknown == {}


def test_all_four_series_exist_even_without_records(taxonomy):
    series_set, _ = build_daily_series([], [], taxonomy, WINDOW, regions=["R009"])
    assert len(series_set.data) == 4
    for key, values in series_set.data.items():
        assert key[0] == "R009"
        assert values.sum() == 0.0


def test_same_day_records_sum_before_weighting(taxonomy):
    series_set, _ = build_daily_series(
        [],
        [_tx("2017-08-05", "R001", "restaurant", 100.0), _tx("2017-08-05", "R001", "restaurant", 50.0)],
        taxonomy,
        WINDOW,
    )
    value = series_set[("R001", "transaction", NON_ESSENTIAL)][4]
    assert value == pytest.approx(0.631 * 150.0, rel=1e-12)


def test_series_additivity_under_dataset_split(taxonomy):
    rng = random.Random(11)
    trips = [
        _trip(f"2017-08-{rng.randrange(1, 28):02d}", f"R{rng.randrange(3):03d}",
              rng.choice(list(DEFAULT_WEIGHTS)), rng.randrange(0, 50))
        for _ in range(400)
    ]
    whole, _ = build_daily_series(trips, [], taxonomy, WINDOW)
    first, _ = build_daily_series(trips[::2], [], taxonomy, WINDOW, regions=whole.regions)
    second, _ = build_daily_series(trips[1::2], [], taxonomy, WINDOW, regions=whole.regions)
    for key in whole.keys():
        combined = first[key] + second[key]
        assert combined == pytest.approx(whole[key], rel=1e-12, abs=1e-12)


def test_series_independent_of_record_order(taxonomy):
    rng = random.Random(13)
    trips = [
        _trip(f"2017-08-{rng.randrange(1, 28):02d}", "R001",
              rng.choice(list(DEFAULT_WEIGHTS)), rng.randrange(0, 50))
        for _ in range(300)
    ]
    reference, _ = build_daily_series(trips, [], taxonomy, WINDOW)
    shuffled = trips[:]
    rng.shuffle(shuffled)
    permuted, _ = build_daily_series(shuffled, [], taxonomy, WINDOW)
    for key in reference.keys():
        assert (reference[key] == permuted[key]).all()


def test_unknown_code_policies(taxonomy):
    trips = [_trip("2017-08-05", "R001", "florist", 3)]
    with pytest.raises(TaxonomyError):
        build_daily_series(trips, [], taxonomy, WINDOW)
    _, unknown = build_daily_series(trips, [], taxonomy, WINDOW, unknown_policy=POLICY_SKIP)
    assert unknown == {"florist": 1}
