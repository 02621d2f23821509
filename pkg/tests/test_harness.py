import json

import numpy as np
import pytest

from phidiv import harness
from phidiv.harness import ExperimentPlan, rep_rng, run


def _plan(**kw):
    base = dict(kind="null-calibration", n=12, s_list=[0.5, 1.0], reps=300, seed=9)
    base.update(kw)
    return ExperimentPlan(**base)


def test_plan_validation():
    with pytest.raises(ValueError):
        _plan(kind="nope")
    with pytest.raises(ValueError):
        _plan(reps=0)
    assert ExperimentPlan.from_dict({"kind": "band-coverage", "n": 5, "s": [1], "reps": 3}).s_list == [1.0]


def test_rep_streams_are_independent_of_order():
    a = rep_rng(1, 0, 5).random(3)
    rep_rng(1, 0, 4).random(3)
    assert np.array_equal(a, rep_rng(1, 0, 5).random(3))
    assert not np.array_equal(a, rep_rng(1, 1, 5).random(3))


def test_results_independent_of_chunking_and_workers(monkeypatch):
    plan = _plan(keep_draws=True)
    ref = run(plan)
    monkeypatch.setattr(harness, "_chunk_size", lambda kind, n: 7)
    chunked = run(plan)
    par = run(_plan(keep_draws=True, workers=2))
    for other in (chunked, par):
        for k in ref.draws:
            assert np.array_equal(ref.draws[k], other.draws[k])
        assert ref.summaries == other.summaries


def test_null_calibration_small():
    res = run(_plan(reps=2000, method="both", n=20))
    for entry in res.summaries.values():
        assert abs(entry["exact"]["rate"] - 0.05) < 4 * entry["exact"]["se"] + 1e-3
        assert "asymptotic" in entry


def test_band_coverage_small():
    res = run(ExperimentPlan("band-coverage", 20, [1.0], 500, alpha=0.5, seed=1))
    e = res.summaries["1"]
    assert abs(e["rate"] - 0.5) < 4 * e["se"]


def test_poisson_boundary_and_detection_small(tmp_path):
    pb = run(ExperimentPlan("poisson-boundary", 2000, [1.0, 2.0], 100, seed=2, alt={"limit_reps": 200}))
    # the 1/2 lower bound holds in the limit; allow finite-n slack at n = 2000
    assert pb.summaries["2"]["min"] >= 0.3
    det = ExperimentPlan("detection", 5000, [1.0], 40, seed=3,
                         alt={"cells": [{"beta": 0.55, "r": 0.6}],
                              "figure": {"beta": 0.5, "r": 0.15, "s": [0.5], "bins": 10}})
    res = run(det)
    assert res.summaries["cells"][0]["power"]["1"]["rate"] >= res.summaries["size"]["1"]["rate"]
    paths = res.write(tmp_path)
    names = {p.name for p in paths}
    assert {"detection.json", "detection-hist-centered.csv", "detection-hist-plus.csv"} <= names
    header = (tmp_path / "detection-hist-centered.csv").read_text().splitlines()[0]
    assert header == "s,hypothesis,bin_left,bin_right,count"
    doc = json.loads((tmp_path / "detection.json").read_text())
    assert doc["version"] and doc["seeds"] is not None
