"""End-to-end orchestration: ingest through stats, with staged artifacts.

Stages communicate only through their serialized artifacts, so a full run and
a sequence of --only runs produce byte-identical files. All artifacts are
computed first and moved into the output directory together; a failing stage
leaves the directory untouched.

Work artifacts (work/baselines.csv, work/changes.csv) keep full float
precision; report artifacts round floats to 6 significant digits so the
golden bundle is stable.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import aggregate, ingest, metric, milestones, series, stats
from .config import PipelineConfig
from .errors import ParseError, PipelineError, StatsError
from .milestones import MILESTONE_FIELDS, Milestone, change_threshold

STAGE_SERIES = "series"
STAGE_MILESTONES = "milestones"
STAGE_METRIC = "metric"
STAGE_STATS = "stats"
STAGES = (STAGE_SERIES, STAGE_MILESTONES, STAGE_METRIC, STAGE_STATS)

BASELINES_ARTIFACT = "work/baselines.csv"
CHANGES_ARTIFACT = "work/changes.csv"
COVERAGE_ARTIFACT = "coverage_report.json"
MILESTONES_ARTIFACT = "milestones.csv"
METRIC_ARTIFACT = "metric.csv"
STATS_ARTIFACT = "stats.json"
LORENZ_ARTIFACT = "lorenz.csv"

METRIC_COLUMNS = {
    "trip_essential": "norm_trip_e",
    "trip_nonessential": "norm_trip_ne",
    "transaction_essential": "norm_tx_e",
    "transaction_nonessential": "norm_tx_ne",
}

CHI_SQUARE_VARIABLES = ("per_capita_income", "minority_fraction", "flood_fraction")


def format_sig(value: float) -> str:
    """Fixed 6-significant-digit rendering for report artifacts."""
    return f"{value:.6g}"


def round_sig(value: float) -> float:
    return float(format_sig(value))


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# --------------------------------------------------------------------------
# stage: series (ingest + aggregate + baseline + change)


def _stage_series(config: PipelineConfig, read_artifact) -> dict:
    taxonomy = aggregate.load_taxonomy(
        config.taxonomy, renormalize=config.renormalize_weights
    )
    trips_result = ingest.parse_trips(config.inputs["trips"], config.window)
    tx_result = ingest.parse_transactions(config.inputs["transactions"], config.window)
    overlaps_result = ingest.parse_overlaps(config.inputs["overlaps"])

    crosswalk = ingest.resolve_crosswalk(overlaps_result.records)
    region_set = set(crosswalk)

    unmatched_trip_regions: dict[str, int] = {}
    known_trips = []
    for trip in trips_result.records:
        if trip.origin_region in region_set:
            known_trips.append(trip)
        else:
            unmatched_trip_regions[trip.origin_region] = (
                unmatched_trip_regions.get(trip.origin_region, 0) + 1
            )

    broadcast = ingest.broadcast_zip_to_regions(tx_result.records, crosswalk)
    series_set, unknown_codes = aggregate.build_daily_series(
        known_trips,
        broadcast.records,
        taxonomy,
        config.window,
        regions=sorted(region_set),
        unknown_policy=config.unknown_service_policy,
    )
    baselines = series.compute_baselines(
        series_set, config.baseline_window, config.min_baseline
    )
    changes = series.build_change_series(
        series_set,
        baselines,
        half_width=config.smoothing_half_width,
        boundary=config.smoothing_boundary,
    )

    insufficient: dict[str, list[str]] = {}
    for key, baseline in sorted(baselines.items()):
        if not baseline.sufficient:
            region, source, category = key
            insufficient.setdefault(region, []).append(
                milestones.milestone_field(source, category)
            )
    included = [r for r in series_set.regions if r not in insufficient]

    baselines_csv = io.StringIO()
    baselines_csv.write("region,source,category,baseline,sufficient\n")
    for (region, source, category), baseline in sorted(baselines.items()):
        baselines_csv.write(
            f"{region},{source},{category},{baseline.value!r},"
            f"{'true' if baseline.sufficient else 'false'}\n"
        )

    changes_csv = io.StringIO()
    changes_csv.write("region,source,category,day_index,change\n")
    for key in sorted(changes):
        region, source, category = key
        for day_index, value in enumerate(changes[key]):
            changes_csv.write(f"{region},{source},{category},{day_index},{float(value)!r}\n")

    coverage = {
        "window": {
            "start": config.window.start.isoformat(),
            "end": config.window.end.isoformat(),
        },
        "regions": {
            "total": len(series_set.regions),
            "included": len(included),
            "excluded": sorted(insufficient),
        },
        "trips": {
            "data_rows": trips_result.total_rows,
            "accepted": trips_result.accepted,
            "dropped_out_of_window": trips_result.dropped,
            "unmatched_regions": dict(sorted(unmatched_trip_regions.items())),
        },
        "transactions": {
            "data_rows": tx_result.total_rows,
            "accepted": tx_result.accepted,
            "dropped_out_of_window": tx_result.dropped,
            "unmatched_zips": dict(sorted(broadcast.unmatched_zip_rows.items())),
        },
        "insufficient_baselines": {r: insufficient[r] for r in sorted(insufficient)},
        "unknown_service_types": dict(sorted(unknown_codes.items())),
    }
    return {
        BASELINES_ARTIFACT: baselines_csv.getvalue(),
        CHANGES_ARTIFACT: changes_csv.getvalue(),
        COVERAGE_ARTIFACT: _json_text(coverage),
    }


# --------------------------------------------------------------------------
# stage: milestones


def _parse_changes_artifact(text: str, n_days: int) -> dict:
    changes: dict[tuple[str, str, str], np.ndarray] = {}
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["region", "source", "category", "day_index", "change"]:
        raise PipelineError(f"unexpected {CHANGES_ARTIFACT} header: {header}")
    for row in reader:
        region, source, category, day_index, value = row
        key = (region, source, category)
        if key not in changes:
            changes[key] = np.zeros(n_days)
        changes[key][int(day_index)] = float(value)
    return changes


def _stage_milestones(config: PipelineConfig, read_artifact) -> dict:
    changes = _parse_changes_artifact(read_artifact(CHANGES_ARTIFACT), config.window.n_days)
    d0 = config.window.index_of(config.event_day)
    table, _ = milestones.build_milestone_table(
        changes,
        d0,
        config.horizon_days,
        threshold=change_threshold(config.recovered_fraction),
        run_length=config.run_length,
    )

    out = io.StringIO()
    columns = ["region"]
    for field in MILESTONE_FIELDS:
        columns.extend([f"{field}_days", f"{field}_censored"])
    out.write(",".join(columns) + "\n")
    for region in sorted(table):
        cells = [region]
        for field in MILESTONE_FIELDS:
            milestone = table[region][field]
            cells.append(str(milestone.duration_days))
            cells.append("true" if milestone.censored else "false")
        out.write(",".join(cells) + "\n")
    return {MILESTONES_ARTIFACT: out.getvalue()}


def parse_milestones_artifact(text: str) -> dict:
    """milestones.csv -> {region: {field: Milestone}}."""
    reader = csv.DictReader(io.StringIO(text))
    table = {}
    for row in reader:
        entry = {}
        for field in MILESTONE_FIELDS:
            entry[field] = Milestone(
                duration_days=int(row[f"{field}_days"]),
                censored=row[f"{field}_censored"] == "true",
            )
        table[row["region"]] = entry
    return table


# --------------------------------------------------------------------------
# stage: metric


def _stage_metric(config: PipelineConfig, read_artifact) -> dict:
    table = parse_milestones_artifact(read_artifact(MILESTONES_ARTIFACT))
    rows = metric.build_metric_table(table)

    out = io.StringIO()
    out.write("region," + ",".join(METRIC_COLUMNS.values()) + ",integrated,category\n")
    for region in sorted(rows):
        row = rows[region]
        cells = [region]
        cells.extend(format_sig(row.normalized[f]) for f in MILESTONE_FIELDS)
        cells.append(format_sig(row.integrated))
        cells.append(row.category)
        out.write(",".join(cells) + "\n")
    return {METRIC_ARTIFACT: out.getvalue()}


def parse_metric_artifact(text: str) -> dict:
    """metric.csv -> {region: (normalized, integrated, category)}."""
    reader = csv.DictReader(io.StringIO(text))
    rows = {}
    for row in reader:
        normalized = {
            field: float(row[column]) for field, column in METRIC_COLUMNS.items()
        }
        rows[row["region"]] = (normalized, float(row["integrated"]), row["category"])
    return rows


# --------------------------------------------------------------------------
# stage: stats


def _moran_entry(values, weights, permutations, seed) -> dict:
    try:
        result = stats.morans_i(values, weights, permutations=permutations, seed=seed)
    except StatsError as exc:
        return {"error": str(exc)}

    def _finite(value):
        # NaN is not valid JSON; n == 3 leaves the variance undefined
        return round_sig(value) if math.isfinite(value) else None

    entry = {
        "i": round_sig(result.i),
        "expected_i": round_sig(result.expected_i),
        "variance": _finite(result.variance),
        "z_score": _finite(result.z_score),
        "p_value": _finite(result.p_value),
        "n": result.n,
    }
    entry["permutation_p"] = (
        round_sig(result.permutation_p) if result.permutation_p is not None else None
    )
    return entry


def _stage_stats(config: PipelineConfig, read_artifact) -> dict:
    milestone_table = parse_milestones_artifact(read_artifact(MILESTONES_ARTIFACT))
    metric_rows = parse_metric_artifact(read_artifact(METRIC_ARTIFACT))
    adjacency = ingest.parse_adjacency(config.inputs["adjacency"]).records
    attributes = ingest.parse_attributes(config.inputs["attributes"]).records

    regions = sorted(milestone_table)
    weights = stats.SpatialWeights.from_adjacency(adjacency, include=regions)

    moran_section = {}
    fields = list(MILESTONE_FIELDS) + ["integrated"]
    for index, field in enumerate(fields):
        if field == "integrated":
            values = {region: metric_rows[region][1] for region in regions}
        else:
            values = {
                region: float(milestone_table[region][field].duration_days)
                for region in regions
            }
        moran_section[field] = _moran_entry(
            values, weights, config.permutations, [config.seed, index]
        )

    integrated = {region: metric_rows[region][1] for region in regions}
    with_attributes = sorted(set(regions) & set(attributes))
    chi_section = {}
    for variable in CHI_SQUARE_VARIABLES:
        try:
            if len(with_attributes) < 4:
                raise StatsError(
                    f"chi-square needs >= 4 regions with attributes, got {len(with_attributes)}"
                )
            recovery_labels, recovery_degenerate = stats.dichotomize_by_median(
                {region: integrated[region] for region in with_attributes}
            )
            attr_values = {
                region: getattr(attributes[region], variable) for region in with_attributes
            }
            attr_labels, attr_degenerate = stats.dichotomize_by_median(attr_values)
            if recovery_degenerate or attr_degenerate:
                raise StatsError("degenerate median split: all regions on one side")
            result = stats.chi_square_2x2(recovery_labels, attr_labels, yates=config.yates)
            chi_section[variable] = {
                "statistic": round_sig(result.statistic),
                "dof": result.dof,
                "p_value": round_sig(result.p_value),
                "table": [list(result.table[0]), list(result.table[1])],
                "n": len(with_attributes),
            }
        except StatsError as exc:
            chi_section[variable] = {"error": str(exc)}

    lorenz_text = "pop_share,metric_share\n"
    try:
        curve = stats.gini(integrated.values())
        gini_section = {"value": round_sig(curve.gini), "n": curve.n}
        lorenz_text += "".join(
            f"{format_sig(p)},{format_sig(s)}\n" for p, s in curve.points
        )
    except StatsError as exc:
        gini_section = {"error": str(exc)}

    payload = {
        "regions": {
            "milestone_regions": len(regions),
            "moran_isolated": list(weights.isolated),
            "with_attributes": len(with_attributes),
        },
        "morans_i": moran_section,
        "chi_square": chi_section,
        "gini": gini_section,
        "options": {
            "permutations": config.permutations,
            "yates": config.yates,
            "seed": config.seed,
        },
    }
    return {STATS_ARTIFACT: _json_text(payload), LORENZ_ARTIFACT: lorenz_text}


# --------------------------------------------------------------------------
# runner


_STAGE_FUNCS = {
    STAGE_SERIES: _stage_series,
    STAGE_MILESTONES: _stage_milestones,
    STAGE_METRIC: _stage_metric,
    STAGE_STATS: _stage_stats,
}


@dataclass
class RunResult:
    output_dir: Path
    written: list[str]


def run(config: PipelineConfig, only: str | None = None) -> RunResult:
    """Execute the pipeline (or one stage) and commit artifacts atomically."""
    if only is not None and only not in STAGES:
        raise PipelineError(f"unknown stage {only!r}; expected one of {STAGES}")
    stages = STAGES if only is None else (only,)

    produced: dict[str, str] = {}

    def read_artifact(name: str) -> str:
        if name in produced:
            return produced[name]
        path = config.output_dir / name
        if not path.exists():
            raise PipelineError(
                f"artifact {name} not found in {config.output_dir}; run upstream stages first"
            )
        return path.read_text(encoding="utf-8")

    for stage in stages:
        produced.update(_STAGE_FUNCS[stage](config, read_artifact))

    _commit(config.output_dir, produced)
    return RunResult(output_dir=config.output_dir, written=sorted(produced))


def _commit(output_dir: Path, artifacts: dict):
    output_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=output_dir))
    try:
        for name, text in artifacts.items():
            target = staging / name
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        for name in artifacts:
            final = output_dir / name
            final.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / name, final)
    finally:
        shutil.rmtree(staging, ignore_errors=True)


# --------------------------------------------------------------------------
# validation (diagnostics without running)


def validate(config: PipelineConfig) -> list:
    """Schema, coverage, and sufficiency diagnostics; empty list means clean."""
    diagnostics = []

    parsed = {}
    parsers = {
        "trips": lambda p: ingest.parse_trips(p, config.window),
        "transactions": lambda p: ingest.parse_transactions(p, config.window),
        "overlaps": ingest.parse_overlaps,
        "adjacency": ingest.parse_adjacency,
        "attributes": ingest.parse_attributes,
    }
    for name in ("trips", "transactions", "overlaps", "adjacency", "attributes"):
        path = config.inputs[name]
        if not Path(path).exists():
            diagnostics.append({"kind": "missing-file", "input": name, "detail": str(path)})
            continue
        try:
            parsed[name] = parsers[name](path)
        except ParseError as exc:
            diagnostics.append({"kind": "schema-error", "input": name, "detail": str(exc)})

    try:
        taxonomy = aggregate.load_taxonomy(
            config.taxonomy, renormalize=config.renormalize_weights
        )
    except Exception as exc:  # taxonomy problems are diagnostics here, not crashes
        diagnostics.append({"kind": "taxonomy-error", "detail": str(exc)})
        return diagnostics

    for name in ("trips", "transactions"):
        result = parsed.get(name)
        if result and result.dropped:
            diagnostics.append(
                {"kind": "out-of-window-rows", "input": name, "rows": result.dropped}
            )

    if "trips" not in parsed or "transactions" not in parsed or "overlaps" not in parsed:
        return diagnostics

    crosswalk = ingest.resolve_crosswalk(parsed["overlaps"].records)
    region_set = set(crosswalk)
    unmatched_regions: dict[str, int] = {}
    known_trips = []
    for trip in parsed["trips"].records:
        if trip.origin_region in region_set:
            known_trips.append(trip)
        else:
            unmatched_regions[trip.origin_region] = unmatched_regions.get(trip.origin_region, 0) + 1
    for region in sorted(unmatched_regions):
        diagnostics.append(
            {"kind": "unmatched-region", "region": region, "rows": unmatched_regions[region]}
        )

    broadcast = ingest.broadcast_zip_to_regions(parsed["transactions"].records, crosswalk)
    for zip_code in sorted(broadcast.unmatched_zip_rows):
        diagnostics.append(
            {
                "kind": "unmatched-zip",
                "zip": zip_code,
                "rows": broadcast.unmatched_zip_rows[zip_code],
            }
        )

    series_set, unknown_codes = aggregate.build_daily_series(
        known_trips,
        broadcast.records,
        taxonomy,
        config.window,
        regions=sorted(region_set),
        unknown_policy=aggregate.POLICY_SKIP,
    )
    for code in sorted(unknown_codes):
        diagnostics.append(
            {"kind": "unknown-service-type", "code": code, "rows": unknown_codes[code]}
        )

    baselines = series.compute_baselines(
        series_set, config.baseline_window, config.min_baseline
    )
    insufficient: dict[str, list[str]] = {}
    for key, baseline in sorted(baselines.items()):
        if not baseline.sufficient:
            region, source, category = key
            insufficient.setdefault(region, []).append(
                milestones.milestone_field(source, category)
            )
    for region in sorted(insufficient):
        diagnostics.append(
            {"kind": "insufficient-baseline", "region": region, "fields": insufficient[region]}
        )
    return diagnostics
