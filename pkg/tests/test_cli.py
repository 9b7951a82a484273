"""End-to-end tests of the icnf command line on a tiny configuration."""

import json
import logging
from pathlib import Path

import pandas as pd
import pytest

from main import main


@pytest.fixture
def ini(tmp_path, tiny_run_config, write_ini):
    config = tiny_run_config.with_updates("experiment", variants=["a", "c", "d"])
    return write_ini(tmp_path / "tiny.ini", config.to_dict())


@pytest.fixture
def paths(tiny_run_config):
    return {name: Path(value) for name, value in tiny_run_config.paths.model_dump().items()}


def run(*argv) -> int:
    return main(list(argv))


class TestPipeline:
    def test_full_pipeline(self, ini, paths, tmp_path):
        assert run("synth", "--config", ini) == 0
        assert (paths["cohort_dir"] / "raw" / "manifest.csv").exists()
        assert run("prep", "--config", ini) == 0

        assert run("train-forecaster", "--config", ini, "--model", "brainlm", "--base-length", "137") == 0
        ckpt = paths["forecaster_dir"] / "brainlm_137.icnf"
        assert ckpt.exists()
        assert json.loads(ckpt.with_name(ckpt.name + ".json").read_text())["trained"] is True
        curves = pd.read_csv(ckpt.with_name(ckpt.name + ".curves.csv"))
        assert list(curves.columns) == ["epoch", "train_loss", "val_mse"]

        assert run("build-variants", "--config", ini) == 0
        variants = paths["variants_dir"]
        for vid, length in (("a", 137), ("c", 141), ("d", 194)):
            manifest = pd.read_csv(variants / vid / "manifest.csv")
            assert set(manifest["T"]) == {length}
        assert json.loads((variants / "variants.json").read_text())["variants"] == ["a", "c", "d"]

        attention = tmp_path / "attention.csv"
        assert run("train-classifier", "--config", ini, "--data", str(variants / "c"), "--export-attention", str(attention)) == 0
        report = json.loads((paths["run_dir"] / "classifier_c.icnf.report.json").read_text())
        assert 0.0 <= report["test_auc"] <= 1.0
        assert len(pd.read_csv(attention)) == 20 * 141

        extended = tmp_path / "extended"
        assert run(
            "extend", "--config", ini, "--model", "brainlm", "--ckpt", str(ckpt),
            "--data", str(paths["cohort_dir"] / "prepped"), "--out", str(extended),
        ) == 0
        assert set(pd.read_csv(extended / "manifest.csv")["T"]) <= {141, 198}

        assert run("run-matrix", "--config", ini, "--threads", "2") == 0
        manifest = pd.read_csv(paths["run_dir"] / "manifest.csv")
        assert len(manifest) == 3 * 1 * 2
        summary = pd.read_csv(paths["run_dir"] / "summary.csv")
        assert list(summary["variant"]) == ["a", "c", "d"]

        assert run("interpret", "--config", ini) == 0
        sensitivity = pd.read_csv(paths["run_dir"] / "sensitivity.csv")
        assert len(sensitivity) == 2 * 53
        assert len(pd.read_csv(paths["run_dir"] / "sensitivity_top5.csv")) == 2 * 5
        assert (paths["run_dir"] / "sensitivity_domains.csv").exists()

    def test_current_stage_is_skipped(self, ini, paths, caplog):
        assert run("synth", "--config", ini) == 0
        record = paths["cohort_dir"] / "raw" / "stage.json"
        first = record.read_text()
        with caplog.at_level(logging.WARNING):
            assert run("synth", "--config", ini) == 0
        assert "up to date" in caplog.text
        assert record.read_text() == first

    def test_force_reruns(self, ini, paths, caplog):
        assert run("synth", "--config", ini) == 0
        with caplog.at_level(logging.WARNING):
            assert run("synth", "--config", ini, "--force") == 0
        assert "up to date" not in caplog.text

    def test_seed_override_changes_cohort(self, ini, paths, tmp_path):
        assert run("synth", "--config", ini, "--out", str(tmp_path / "s1"), "--seed", "1") == 0
        assert run("synth", "--config", ini, "--out", str(tmp_path / "s2"), "--seed", "2") == 0
        one = (tmp_path / "s1" / "series" / "CN0000.icns").read_bytes()
        two = (tmp_path / "s2" / "series" / "CN0000.icns").read_bytes()
        assert one != two

    def test_identical_runs_write_identical_files(self, ini, tmp_path):
        assert run("synth", "--config", ini) == 0
        assert run("prep", "--config", ini) == 0
        for name in ("one", "two"):
            out = tmp_path / name / "lstm.icnf"
            out.parent.mkdir()
            assert run("train-forecaster", "--config", ini, "--model", "lstm", "--base-length", "137", "--out", str(out)) == 0
        for suffix in ("", ".json", ".curves.csv"):
            first = (tmp_path / "one" / f"lstm.icnf{suffix}").read_bytes()
            assert first == (tmp_path / "two" / f"lstm.icnf{suffix}").read_bytes()


class TestFailures:
    def test_missing_prerequisite(self, ini, caplog):
        with caplog.at_level(logging.ERROR):
            assert run("prep", "--config", ini) == 1
        assert "icnf synth" in caplog.text

    def test_missing_forecaster(self, ini, caplog):
        assert run("synth", "--config", ini) == 0
        assert run("prep", "--config", ini) == 0
        with caplog.at_level(logging.ERROR):
            assert run("build-variants", "--config", ini) == 1
        assert "train-forecaster" in caplog.text

    def test_invalid_config(self, tmp_path, write_ini):
        bad = write_ini(tmp_path / "bad.ini", {"forecast": {"epochs": -1}})
        assert run("synth", "--config", bad) == 2

    def test_missing_config_file(self, tmp_path):
        assert run("synth", "--config", str(tmp_path / "absent.ini")) == 2

    def test_base_length_must_be_a_schema_length(self, ini):
        assert run("synth", "--config", ini) == 0
        assert run("prep", "--config", ini) == 0
        assert run("train-forecaster", "--config", ini, "--model", "lstm", "--base-length", "150") == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            run("fly")
