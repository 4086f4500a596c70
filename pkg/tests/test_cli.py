import argparse
import json
import os
from pathlib import Path

import pytest

from fuselearn.cli import (
    main,
    parse_channels,
    parse_interval,
    parse_models,
    parse_rates,
    parse_weights,
)
from fuselearn.labeling import LabelWeights

SYNTH_CONFIG = {"n_units": 12, "seed": 11}


def run_flow(root: Path) -> tuple[Path, Path, Path]:
    config = root / "synth.json"
    config.write_text(json.dumps(SYNTH_CONFIG))
    data = root / "data"
    features = root / "features"
    report = root / "report"
    assert main(["synth", "--config", str(config), "--out", str(data)]) == 0
    assert (
        main(["featurize", str(data / "manifest.json"), "--out", str(features)])
        == 0
    )
    assert (
        main([
            "evaluate", str(features), "--out", str(report),
            "--k", "3", "--models", "cart",
        ])
        == 0
    )
    return data, features, report


@pytest.fixture(scope="module")
def flow(tmp_path_factory):
    saved = {k: os.environ.pop(k) for k in list(os.environ) if k.startswith("FUSELEARN_")}
    try:
        return run_flow(tmp_path_factory.mktemp("flow"))
    finally:
        os.environ.update(saved)


class TestOptionParsers:
    def test_interval(self):
        assert parse_interval("60s") == 60_000
        assert parse_interval("2m") == 120_000
        assert parse_interval("90000ms") == 90_000
        assert parse_interval("750") == 750
        for bad in ("abc", "0", "-5s"):
            with pytest.raises(argparse.ArgumentTypeError):
                parse_interval(bad)

    def test_rates(self):
        rates = parse_rates("gaze=25")
        assert rates == {"gaze": 25.0, "mouse": 20.0, "video": 15.0}
        assert parse_rates("eye=10,frames=5")["video"] == 5.0
        for bad in ("gaze", "gaze=0", "audio=3"):
            with pytest.raises(argparse.ArgumentTypeError):
                parse_rates(bad)

    def test_channels(self):
        assert parse_channels("eye,frames") == ("video", "gaze")
        assert parse_channels("mouse,video") == ("video", "mouse")
        for bad in ("audio", " , "):
            with pytest.raises(argparse.ArgumentTypeError):
                parse_channels(bad)

    def test_models(self):
        assert parse_models("rf,CART") == ("cart", "forest")
        assert parse_models("gbdt") == ("gbdt",)
        with pytest.raises(argparse.ArgumentTypeError):
            parse_models("svm")

    def test_weights(self):
        w = parse_weights("1,1,2")
        assert w == LabelWeights(0.25, 0.25, 0.5)
        for bad in ("1,2", "-1,0,0", "a,b,c"):
            with pytest.raises(argparse.ArgumentTypeError):
                parse_weights(bad)


class TestArtifacts:
    def test_synth_outputs(self, flow):
        data, _, _ = flow
        for name in (
            "manifest.json", "gaze.csv", "mouse.csv", "frames.csv",
            "ground_truth.csv",
        ):
            assert (data / name).exists(), name

    def test_featurize_outputs(self, flow):
        _, features, _ = flow
        for channel in ("video", "gaze", "mouse"):
            assert (features / f"features_{channel}.csv").exists()
            assert (features / f"features_{channel}.csv.meta.json").exists()
        labels = (features / "labels.csv").read_text().splitlines()
        assert labels[0] == "unit_id,label"
        assert len(labels) == 1 + SYNTH_CONFIG["n_units"]
        meta = json.loads((features / "featurize.json").read_text())
        assert "config_hash" in meta and meta["settings"]["interval_ms"] == 60_000

    def test_evaluate_outputs(self, flow):
        _, _, report = flow
        csv_lines = (report / "report.csv").read_text().splitlines()
        assert csv_lines[0] == "combination,CART"
        assert len(csv_lines) == 1 + 7  # all channel combinations
        doc = json.loads((report / "report.json").read_text())
        assert doc["k"] == 3 and doc["seed"] == 0
        assert len(doc["results"]) == 7
        assert (report / "correlation.csv").exists()
        corr = json.loads((report / "correlation.json").read_text())
        assert set(corr["pairs"]) == {"video~gaze", "video~mouse", "gaze~mouse"}

    def test_single_channel_evaluate_skips_correlation(self, flow, tmp_path):
        _, features, _ = flow
        out = tmp_path / "single"
        code = main([
            "evaluate", str(features), "--out", str(out),
            "--channels", "gaze", "--k", "3", "--models", "cart",
        ])
        assert code == 0
        doc = json.loads((out / "report.json").read_text())
        assert [r["combination"] for r in doc["results"]] == ["gaze"]
        assert not (out / "correlation.json").exists()


class TestReportCommand:
    def test_text_format(self, flow, capsys):
        _, _, report = flow
        assert main(["report", str(report)]) == 0
        out = capsys.readouterr().out
        assert "combination" in out and "CART" in out
        assert "best:" in out and "cross-channel mean |r|" in out

    def test_csv_format(self, flow, capsys):
        _, _, report = flow
        assert main(["report", str(report), "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "combination,CART"
        assert lines[1].split(",")[0] == "video"

    def test_json_format(self, flow, capsys):
        _, _, report = flow
        assert main(["report", str(report), "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert {"best", "results", "pairs", "seed", "config_hash"} <= set(doc)
        best = max(doc["results"], key=lambda r: r["mean_r2"])
        assert doc["best"] == best


class TestDeterminism:
    def test_rerun_is_byte_identical(self, flow, tmp_path):
        data, features, report = flow
        data2, features2, report2 = run_flow(tmp_path)
        for name in ("manifest.json", "gaze.csv", "mouse.csv", "frames.csv"):
            assert (data / name).read_bytes() == (data2 / name).read_bytes()
        for channel in ("video", "gaze", "mouse"):
            name = f"features_{channel}.csv"
            assert (features / name).read_bytes() == (features2 / name).read_bytes()
        assert (features / "labels.csv").read_bytes() == (
            features2 / "labels.csv"
        ).read_bytes()
        for name in ("report.csv", "report.json", "correlation.json"):
            assert (report / name).read_bytes() == (report2 / name).read_bytes()


class TestExitCodes:
    def test_usage_errors(self, capsys):
        assert main([]) == 1
        assert main(["bogus"]) == 1
        capsys.readouterr()

    def test_help_is_success(self, capsys):
        assert main(["--help"]) == 0
        assert "synth" in capsys.readouterr().out

    def test_missing_manifest_is_data_error(self, tmp_path, capsys):
        assert main(["featurize", str(tmp_path / "nope.json")]) == 2
        assert "data error" in capsys.readouterr().err

    def test_missing_features_is_data_error(self, tmp_path, capsys):
        assert main(["evaluate", str(tmp_path), "--k", "3"]) == 2
        capsys.readouterr()

    def test_report_without_results_is_data_error(self, tmp_path, capsys):
        assert main(["report", str(tmp_path)]) == 2
        (tmp_path / "report.json").write_text(json.dumps({"results": []}))
        assert main(["report", str(tmp_path)]) == 2
        capsys.readouterr()

    def test_too_many_folds_is_numeric_error(self, flow, tmp_path, capsys):
        _, features, _ = flow
        code = main([
            "evaluate", str(features), "--out", str(tmp_path / "r"),
            "--k", "13", "--models", "cart",
        ])
        assert code == 3
        assert "numeric error" in capsys.readouterr().err

    def test_bad_synth_config_is_data_error(self, tmp_path, capsys):
        config = tmp_path / "synth.json"
        config.write_text(json.dumps({"n_units": 0}))
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
        config.write_text(json.dumps({"betamax": 1}))
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
        config.write_text("{not json")
        assert main(["synth", "--config", str(config), "--out", str(tmp_path / "o")]) == 2
        capsys.readouterr()


class TestEnvOverrides:
    def test_env_supplies_defaults(self, flow, tmp_path, monkeypatch, capsys):
        _, features, _ = flow
        out = tmp_path / "envrun"
        monkeypatch.setenv("FUSELEARN_K", "4")
        monkeypatch.setenv("FUSELEARN_MODELS", "cart")
        monkeypatch.setenv("FUSELEARN_OUT", str(out))
        assert main(["evaluate", str(features)]) == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["k"] == 4
        assert {r["model"] for r in doc["results"]} == {"cart"}
        capsys.readouterr()

    def test_cli_beats_env(self, flow, tmp_path, monkeypatch, capsys):
        _, features, _ = flow
        monkeypatch.setenv("FUSELEARN_K", "4")
        out = tmp_path / "cli-wins"
        assert main([
            "evaluate", str(features), "--out", str(out),
            "--k", "3", "--models", "cart",
        ]) == 0
        assert json.loads((out / "report.json").read_text())["k"] == 3
        capsys.readouterr()

    def test_bad_env_value_is_data_error(self, flow, tmp_path, monkeypatch, capsys):
        _, features, _ = flow
        monkeypatch.setenv("FUSELEARN_K", "three")
        code = main([
            "evaluate", str(features), "--out", str(tmp_path / "r"),
            "--models", "cart",
        ])
        assert code == 2
        capsys.readouterr()

    def test_env_format_for_report(self, flow, monkeypatch, capsys):
        _, _, report = flow
        monkeypatch.setenv("FUSELEARN_FORMAT", "json")
        assert main(["report", str(report)]) == 0
        json.loads(capsys.readouterr().out)
