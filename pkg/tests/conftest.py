from __future__ import annotations

import pytest

from recovery_track.config import load_config
from recovery_track.pipeline import run
from recovery_track.synth import ScenarioSpec, generate

GOLDEN_SCENARIO = {
    "name": "golden-city",
    "seed": 42,
    "n_regions": 200,
}

GOLDEN_ARTIFACTS = (
    "milestones.csv",
    "metric.csv",
    "stats.json",
    "lorenz.csv",
    "coverage_report.json",
)


def write_csv(directory, name, text):
    path = directory / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def golden_city(tmp_path_factory):
    """The bundled synthetic city (200 regions, seed 42, noiseless), run once."""
    root = tmp_path_factory.mktemp("golden-city")
    spec = ScenarioSpec.from_mapping(GOLDEN_SCENARIO)
    paths = generate(spec, root)
    config = load_config(paths["config.json"])
    result = run(config)
    return {"root": root, "spec": spec, "config": config, "out": result.output_dir}
