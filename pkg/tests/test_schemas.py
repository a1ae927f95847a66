"""Emitted JSON documents validate against the published schemas."""

import json

import jsonschema
import numpy as np
import pytest

from markovmix.data import CovariateMatrix, Panel
from markovmix.gmmc import estimate_gmmc, save_fit
from markovmix.schemas import FIT_SCHEMA, REPORT_SCHEMA, SIM_REPORT_SCHEMA
from markovmix.simulation import (
    SimConfig,
    run_part1,
    run_part2,
    simulate_homog_chain,
    simulate_nonhomog_chain,
)


@pytest.fixture(scope="module")
def small_fit():
    rng = np.random.default_rng(17)
    n = 400
    x = rng.normal(2.0, 5.0, size=n)
    s1 = simulate_nonhomog_chain(np.array([[-1.0, 1.5, 0.4]]), x, n, rng=rng)
    s2 = simulate_homog_chain(np.array([[0.6, 0.4], [0.3, 0.7]]), n, rng=rng)
    panel = Panel(np.column_stack([s1, s2]), (2, 2))
    return estimate_gmmc(panel, CovariateMatrix(x.reshape(-1, 1), ["x"]), x_lag=1)


def test_fit_report_schema(small_fit):
    jsonschema.validate(small_fit.fit_report.to_dict(), REPORT_SCHEMA)


def test_serialized_fit_schema(small_fit, tmp_path):
    path = tmp_path / "fit.json"
    save_fit(small_fit, path)
    doc = json.loads(path.read_text())
    jsonschema.validate(doc, FIT_SCHEMA)


def test_part1_report_schema():
    cfg = SimConfig(n_obs=60, n_reps=5, states=2, scenario="part1", seed=21)
    report = run_part1(cfg)
    doc = json.loads(report.to_json())
    jsonschema.validate(doc, SIM_REPORT_SCHEMA)


def test_part2_report_schema():
    cfg = SimConfig(
        n_obs=120, n_reps=4, states=2, scenario="part2",
        lambda_true=(0.8, 0.2), seed=5,
    )
    report = run_part2(cfg)
    doc = json.loads(report.to_json())
    jsonschema.validate(doc, SIM_REPORT_SCHEMA)
    assert len(doc["lambda_abs_errors"]) == 4 - doc["n_failed"]
