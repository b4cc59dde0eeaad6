import json
import math

import numpy as np
import pandas as pd

from tiadc_yield import __version__
from tiadc_yield.monitoring.export import (
    ResultCollector,
    atomic_write,
    read_csv,
    read_metadata,
    render_csv,
    resolve_path,
    run_metadata,
    to_json,
)


def test_run_metadata_fields():
    meta = run_metadata("yield", {"n": 16}, seed=3, units={"step": "LSB"})
    assert meta["version"] == __version__
    assert meta["seed"] == 3
    assert meta["units"] == {"step": "LSB"}
    assert "timestamp" in meta


def test_json_handles_numpy_and_infinities():
    text = to_json({"a": np.float64(1.5), "b": np.arange(3), "c": -math.inf, "d": [math.nan]})
    data = json.loads(text)
    assert data == {"a": 1.5, "b": [0, 1, 2], "c": "-inf", "d": ["nan"]}


def test_csv_round_trip_with_metadata(tmp_path):
    frame = pd.DataFrame({"frequency_hz": [0.0, 2.5e8], "power_db": [-49.03, -46.02]})
    path = tmp_path / "spurs.csv"
    atomic_write(path, render_csv(frame, run_metadata("predict", {"n": 4})))
    assert path.read_text().startswith("# {")
    assert read_metadata(path)["command"] == "predict"
    loaded = read_csv(path)
    assert list(loaded.columns) == ["frequency_hz", "power_db"]
    assert loaded["power_db"].tolist() == [-49.03, -46.02]


def test_csv_without_metadata(tmp_path):
    path = tmp_path / "plain.csv"
    atomic_write(path, render_csv(pd.DataFrame({"x": [1.0]})))
    assert read_metadata(path) == {}
    assert read_csv(path)["x"].tolist() == [1.0]


def test_resolve_path_against_base(tmp_path):
    assert resolve_path("spurs.csv", tmp_path / "results") == tmp_path / "results" / "spurs.csv"
    absolute = tmp_path / "elsewhere.csv"
    assert resolve_path(absolute, tmp_path / "results") == absolute


def test_atomic_write_replaces_and_cleans_up(tmp_path):
    path = tmp_path / "nested" / "out.json"
    atomic_write(path, "first")
    atomic_write(path, "second")
    assert path.read_text() == "second"
    assert [p.name for p in path.parent.iterdir()] == ["out.json"]


def test_collector_summary_and_warnings():
    out = ResultCollector(command="cdf", parameters={"n": 16}, seed=0)
    out.record(quantile_db=-80.0)
    out.warn("noisy tail")
    out.warn("noisy tail")
    out.warn(None)
    out.table = pd.DataFrame({"power_db": [-90.0, -80.0]})
    summary = out.summary()
    assert summary["warnings"] == ["noisy tail"]
    assert summary["warning_count"] == 1
    assert summary["table"] == [{"power_db": -90.0}, {"power_db": -80.0}]
    assert json.loads(out.render("json"))["results"]["quantile_db"] == -80.0


def test_collector_csv_falls_back_to_results(tmp_path):
    out = ResultCollector(command="yield", seed=1)
    out.record(step=0.55, unit="LSB")
    path = out.save(str(tmp_path / "y.csv"), fmt="csv")
    assert read_csv(path).to_dict(orient="records") == [{"step": 0.55, "unit": "LSB"}]
    assert read_metadata(path)["seed"] == 1
