"""Tests for experiment preset loading."""

import json
from pathlib import Path

import pytest

from src.uddpy.config import (
    ExperimentConfig,
    default_config,
    load_experiment_config,
)
from src.uddpy.exceptions import ParameterError
from src.uddpy.sketch import CollapsePolicy

SHIPPED = Path(__file__).resolve().parents[2] / "config" / "experiments.json"


def write_config(tmp_path, data):
    path = tmp_path / "experiments.json"
    path.write_text(json.dumps(data))
    return path


class TestExperimentConfig:
    def test_from_dict(self):
        """Test presets parse defaults, sweep settings and enabled datasets."""
        config = ExperimentConfig.from_dict(
            {
                "datasets": [
                    {"name": "exp", "dist": "exponential", "params": [2]},
                    {"name": "off", "dist": "uniform", "params": [1, 2], "enabled": False},
                ],
                "defaults": {"alpha": 0.01, "buckets": 64, "seed": 5, "n": 100},
                "sweep": {"procs": [1, 4], "policies": ["uniform"], "repeats": 3},
            }
        )
        assert config.alpha == 0.01
        assert config.buckets == 64
        assert config.procs == [1, 4]
        assert config.policies == [CollapsePolicy.UNIFORM]
        assert config.repeats == 3
        assert [d.name for d in config.enabled_datasets()] == ["exp"]

        streams = config.streams()
        assert len(streams) == 1
        assert streams[0].dist == "exponential"
        assert streams[0].params == (2.0,)
        assert streams[0].n == 100
        assert streams[0].seed == 5
        assert config.streams(n=7)[0].n == 7

    def test_missing_dataset_field(self):
        """Test a dataset without a distribution raises ParameterError."""
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"datasets": [{"name": "x", "params": [1]}]})

    def test_bad_policy(self):
        """Test an unknown sweep policy raises ParameterError."""
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"sweep": {"policies": ["sideways"]}})

    def test_bad_procs(self):
        """Test zero or empty process counts raise ParameterError."""
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"sweep": {"procs": [0, 2]}})
        with pytest.raises(ParameterError):
            ExperimentConfig.from_dict({"sweep": {"procs": []}})

    def test_defaults_cover_five_datasets(self):
        """Test the built-in presets cover all five distributions."""
        config = default_config()
        assert {d.dist for d in config.datasets} == {
            "beta",
            "exponential",
            "lognormal",
            "normal",
            "uniform",
        }


class TestLoadExperimentConfig:
    def test_loads_file(self, tmp_path):
        """Test values from a presets file override the defaults."""
        path = write_config(tmp_path, {"defaults": {"alpha": 0.02, "buckets": 16}})
        config = load_experiment_config(path)
        assert config.alpha == 0.02
        assert config.buckets == 16

    def test_missing_file_falls_back(self, tmp_path, caplog):
        """Test a missing presets file falls back to the defaults with a warning."""
        config = load_experiment_config(tmp_path / "nope.json")
        assert len(config.datasets) == 5
        assert "not found" in caplog.text

    def test_invalid_json_falls_back(self, tmp_path, caplog):
        """Test unparseable JSON falls back to the defaults with a warning."""
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        config = load_experiment_config(path)
        assert config.alpha == 0.001
        assert "invalid JSON" in caplog.text

    def test_invalid_values_raise(self, tmp_path):
        """Test well-formed JSON with bad values raises ParameterError."""
        path = write_config(tmp_path, {"defaults": {"buckets": "many"}})
        with pytest.raises(ParameterError):
            load_experiment_config(path)

    def test_shipped_presets(self):
        """The repository's config file parses and enables every dataset."""
        config = load_experiment_config(SHIPPED)
        names = [d.name for d in config.enabled_datasets()]
        assert names == ["beta", "exponential", "lognormal", "normal", "uniform"]
        assert config.procs == [1, 2, 4, 8, 16]
