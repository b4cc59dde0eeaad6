import json

import pytest

import tiadc_yield.cli.main as cli
from tiadc_yield.core.errors import NonConvergenceError
from tiadc_yield.monitoring.export import read_csv, read_metadata


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    """Run from an empty directory so only built-in settings apply"""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TIADC_CONFIG", raising=False)
    return tmp_path


def run_json(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    assert code == cli.EXIT_OK, captured.err
    return json.loads(captured.out)


def test_predict_offset_example(capsys):
    out = run_json(capsys, "predict", "--n", "4", "--fs", "1e9", "--offsets", "0.01,0,0,0")
    powers = [row["power_db"] for row in out["table"]]
    assert powers == pytest.approx([-49.03, -46.02, -49.03], abs=0.01)
    assert out["metadata"]["command"] == "predict"
    assert out["results"]["offset_worst_db"] == pytest.approx(-46.02, abs=0.01)


def test_predict_gain_needs_tone(capsys):
    code = cli.main(["predict", "--n", "4", "--fs", "1e9", "--gains", "0.01,0,0,0"])
    assert code == cli.EXIT_INVALID
    assert "--tone" in capsys.readouterr().err


def test_predict_gain_with_tone(capsys):
    out = run_json(
        capsys, "predict", "--kind", "gain", "--n", "4", "--fs", "1e9",
        "--gains", "0.01,0,0,0", "--tone", "3e8",
    )
    assert len(out["table"]) == 3
    for row in out["table"]:
        assert row["power_db"] == pytest.approx(-52.04, abs=0.01)


def test_length_mismatch_is_rejected(capsys):
    code = cli.main(["predict", "--n", "4", "--offsets", "0.01,0,0"])
    assert code == cli.EXIT_INVALID
    assert "mismatch length 3 ≠ N=4" in capsys.readouterr().err


def test_two_mismatch_sources_are_rejected(capsys, isolated):
    path = isolated / "m.txt"
    path.write_text("0\n0\n0\n0\n")
    code = cli.main(
        ["predict", "--n", "4", "--offsets", "0,0,0,0", "--mismatch-file", str(path)]
    )
    assert code == cli.EXIT_INVALID
    assert "exactly one mismatch source" in capsys.readouterr().err


def test_mismatch_file_reports_bad_line(capsys, isolated):
    path = isolated / "bad.txt"
    path.write_text("# sub-ADC offsets\n0.01\nabc\n0\n")
    code = cli.main(
        ["predict", "--kind", "offset", "--n", "4", "--mismatch-file", str(path)]
    )
    assert code == cli.EXIT_INVALID
    assert f"{path}:3:" in capsys.readouterr().err


def test_zero_mismatch_file_gives_empty_table(capsys, isolated):
    path = isolated / "zero.txt"
    path.write_text("0\n0\n0\n0\n")
    out = run_json(
        capsys, "predict", "--kind", "offset", "--n", "4", "--mismatch-file", str(path)
    )
    assert out["table"] == []


def test_sampled_mismatch_is_reproducible(capsys):
    argv = ["predict", "--kind", "offset", "--n", "8", "--dist", "uniform",
            "--width", "1e-3", "--seed", "3"]
    first = run_json(capsys, *argv)
    second = run_json(capsys, *argv)
    assert first["table"] == second["table"]
    assert first["metadata"]["seed"] == 3


def test_yield_offset(capsys):
    out = run_json(
        capsys, "yield", "--kind", "offset", "--n", "16", "--bits", "12",
        "--target", "-80", "--exclude-dc", "--exclude-nyquist",
    )
    assert 0.50 <= out["results"]["step_display"] <= 0.60
    assert out["results"]["unit"] == "LSB"
    assert out["metadata"]["units"]["step"] == "LSB"


def test_yield_skew(capsys):
    out = run_json(
        capsys, "yield", "--kind", "skew", "--n", "16", "--fsig", "12e9", "--target", "-65"
    )
    assert 32.0 <= out["results"]["step_display"] <= 38.0


def test_yield_with_variants_and_validation(capsys):
    out = run_json(
        capsys, "yield", "--kind", "gain", "--target", "-65", "--variants",
        "--validate-trials", "1e5", "--seed", "4",
    )
    results = out["results"]
    assert set(results["variants"]) == {"nyquist_included", "nyquist_excluded"}
    assert abs(results["empirical_yield"] - 0.99) < 3 * results["empirical_yield_stderr"]
    assert out["warning_count"] == 0


def test_yield_needs_target(capsys):
    assert cli.main(["yield", "--kind", "gain"]) == cli.EXIT_INVALID
    assert "--target" in capsys.readouterr().err


def test_yield_skew_needs_frequency(capsys):
    assert cli.main(["yield", "--kind", "skew", "--target", "-65"]) == cli.EXIT_INVALID


def test_nonconvergence_exit_code(capsys, monkeypatch):
    def fail(*args, **kwargs):
        raise NonConvergenceError("bracket exhausted")

    monkeypatch.setattr(cli, "invert_yield", fail)
    code = cli.main(["yield", "--kind", "gain", "--target", "-65"])
    assert code == cli.EXIT_NONCONVERGENCE
    assert "bracket exhausted" in capsys.readouterr().err


def test_simulate_collision_warns(capsys):
    out = run_json(
        capsys, "simulate", "--n", "4", "--fs", "1e9", "--gains", "0.01,0,0,0",
        "--tone", "2.5e8", "--samples", "1024",
    )
    assert out["warning_count"] >= 1


def test_simulate_zero_mismatch_residual(capsys, isolated):
    spectrum = isolated / "spectrum.csv"
    out = run_json(
        capsys, "simulate", "--n", "4", "--fs", "1e9", "--offsets", "0,0,0,0",
        "--tone", "3e8", "--samples", "4096", "--spectrum-output", str(spectrum),
    )
    assert out["results"]["residual_dbfs"] < -250.0
    assert out["results"]["tones"][0]["cycles"] == 1229
    frame = read_csv(spectrum)
    assert list(frame.columns) == ["frequency_hz", "power_dbfs"]
    assert len(frame) == 4096 // 2 + 1


def test_simulate_gain_matches_prediction(capsys):
    out = run_json(
        capsys, "simulate", "--n", "4", "--fs", "1e9", "--gains", "0.01,0,0,0",
        "--tone", "3e8", "--samples", "4096",
    )
    assert out["results"]["max_abs_delta_db"] < 0.01
    assert len(out["table"]) == 3


def test_cdf_table(capsys):
    out = run_json(
        capsys, "cdf", "--kind", "offset", "--n", "16", "--sigma", "7.82e-5",
        "--exclude-dc", "--exclude-nyquist",
    )
    assert len(out["table"]) == 161
    assert out["results"]["quantile_db"] == pytest.approx(-80.0, abs=0.05)
    assert set(out["table"][0]) == {"power_db", "cdf_real", "cdf_circ", "cdf_combined"}


def test_cdf_needs_exactly_one_spread(capsys):
    code = cli.main(["cdf", "--kind", "gain", "--sigma", "1e-3", "--step", "3e-3"])
    assert code == cli.EXIT_INVALID


def test_csv_output_has_metadata_header(capsys, isolated):
    path = isolated / "out" / "predict.csv"
    code = cli.main(
        ["predict", "--n", "4", "--fs", "1e9", "--offsets", "0.01,0,0,0",
         "--format", "csv", "--output", str(path)]
    )
    assert code == cli.EXIT_OK
    assert capsys.readouterr().out == ""
    meta = read_metadata(path)
    assert meta["command"] == "predict"
    assert meta["parameters"]["n"] == 4
    frame = read_csv(path)
    assert frame["power_db"].tolist() == pytest.approx([-49.03, -46.02, -49.03], abs=0.01)


def test_invalid_run_leaves_no_output(capsys, isolated):
    path = isolated / "never.json"
    code = cli.main(["predict", "--n", "4", "--offsets", "0,0,0", "--output", str(path)])
    assert code == cli.EXIT_INVALID
    assert not path.exists()
    assert list(isolated.iterdir()) == []


def test_config_file_with_flag_override(capsys, isolated):
    config = isolated / "run.json"
    config.write_text(json.dumps({"n": 4, "fs": 1e9, "offsets": [0.01, 0, 0, 0], "format": "csv"}))
    out = run_json(capsys, "predict", "--config", str(config), "--format", "json")
    assert len(out["table"]) == 3


def test_config_file_rejects_unknown_keys(capsys, isolated):
    config = isolated / "run.json"
    config.write_text(json.dumps({"n": 4, "offsets": [0, 0, 0, 0], "colour": "red"}))
    assert cli.main(["predict", "--config", str(config)]) == cli.EXIT_INVALID


def test_settings_file_and_environment(capsys, isolated, monkeypatch):
    settings = isolated / "settings.yaml"
    settings.write_text("calibration:\n  yield_target: 0.9\nadc:\n  interleave_factor: 8\n")
    out = run_json(
        capsys, "yield", "--settings", str(settings), "--kind", "gain", "--target", "-65"
    )
    assert out["results"]["query"]["yield"] == 0.9
    assert out["metadata"]["parameters"]["n"] == 8
    monkeypatch.setenv("TIADC_ADC__INTERLEAVE_FACTOR", "4")
    out = run_json(
        capsys, "yield", "--settings", str(settings), "--kind", "gain", "--target", "-65"
    )
    assert out["metadata"]["parameters"]["n"] == 4


def test_ccdf_compare_small_run_warns(capsys):
    out = run_json(
        capsys, "ccdf-compare", "--n", "16", "--trials", "1e4", "--level", "1e-2",
        "--chunk-size", "5000",
    )
    assert out["warning_count"] >= 1
    assert "gap_db" in out["results"]
    assert {row["distribution"] for row in out["table"]} == {"gaussian", "uniform"}


def test_ccdf_compare_rejects_fractional_trials(capsys):
    assert cli.main(["ccdf-compare", "--trials", "1.5e4"]) == cli.EXIT_INVALID


def test_ccdf_compare_rejects_bad_bin(capsys):
    code = cli.main(["ccdf-compare", "--trials", "1e4", "--level", "1e-2", "--bin", "dc"])
    assert code == cli.EXIT_INVALID


def test_sweep_step_mode(capsys):
    out = run_json(
        capsys, "sweep", "--kind", "gain", "--target-from", "-80", "--target-to", "-60",
        "--target-step", "5",
    )
    steps = [row["step_size"] for row in out["table"]]
    assert len(steps) == 5
    assert steps == sorted(steps)
    assert out["results"]["unit"] == "%"


def test_sweep_quantile_mode(capsys):
    out = run_json(
        capsys, "sweep", "--kind", "offset", "--mode", "quantile", "--steps", "0.25,0.5"
    )
    q = [row["quantile_db"] for row in out["table"]]
    assert q[1] - q[0] == pytest.approx(6.0206, abs=1e-4)
    assert out["table"][0]["step_display"] == pytest.approx(0.25)


def test_relative_outputs_land_in_output_dir(capsys, isolated):
    settings = isolated / "settings.yaml"
    settings.write_text("output:\n  output_dir: results\n")
    code = cli.main(
        ["simulate", "--settings", str(settings), "--n", "4", "--fs", "1e9",
         "--offsets", "0.01,0,0,0", "--tone", "3e8", "--samples", "1024",
         "--output", "sim.json", "--spectrum-output", "spectrum.csv"]
    )
    assert code == cli.EXIT_OK
    assert json.loads((isolated / "results" / "sim.json").read_text())["metadata"]
    assert len(read_csv(isolated / "results" / "spectrum.csv")) == 1024 // 2 + 1
    assert not (isolated / "sim.json").exists()


def test_settings_choose_bit_generator(capsys, isolated):
    settings = isolated / "settings.yaml"
    settings.write_text("montecarlo:\n  algorithm: MT19937\n")
    argv = ["ccdf-compare", "--settings", str(settings), "--n", "8", "--trials", "1e4",
            "--level", "1e-2"]
    out = run_json(capsys, *argv)
    assert out["results"]["algorithm"] == "MT19937"
    settings.write_text("montecarlo:\n  algorithm: XorShift\n")
    assert cli.main(argv) == cli.EXIT_INVALID
