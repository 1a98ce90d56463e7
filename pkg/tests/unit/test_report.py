"""Tests for CSV/JSON writers and the HTML sweep report."""

import json

import pytest

from src.uddpy.evaluation import error_profile, run_sweep
from src.uddpy.generators import StreamSpec
from src.uddpy.reduction import build_sketch
from src.uddpy.report import (
    CSV_HEADER,
    SweepReportGenerator,
    profile_csv,
    write_json,
    write_profile_csv,
)
from src.uddpy.sketch import CollapsePolicy, SketchConfig


@pytest.fixture
def small_report():
    values = [1.0, 2.0, 3.0, 4.0]
    return error_profile(build_sketch(SketchConfig(alpha0=0.01, m=8), values), values, grid_size=5)


@pytest.fixture(scope="module")
def small_sweep():
    return run_sweep(
        [StreamSpec("exponential", (3.5,), n=2000, seed=1)],
        [CollapsePolicy.COLLAPSE_FIRST, CollapsePolicy.UNIFORM],
        [1, 2],
        alpha0=0.001,
        m=32,
        grid_size=51,
    )


class TestProfileCsv:
    def test_header_and_rows(self, small_report):
        """Test the profile CSV has a header and one row per grid point."""
        lines = profile_csv(small_report).splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 6
        q, estimate, exact, rel_err = lines[1].split(",")
        assert float(q) == 0.0
        assert float(exact) == 1.0
        assert float(rel_err) <= 0.01

    def test_values_round_trip_exactly(self, small_report):
        """Test CSV estimates parse back to the exact floats."""
        rows = [line.split(",") for line in profile_csv(small_report).splitlines()[1:]]
        assert [float(r[1]) for r in rows] == small_report.estimates

    def test_write_files(self, tmp_path, small_report):
        """Test the CSV and JSON writers produce readable files."""
        csv_path = tmp_path / "profile.csv"
        json_path = tmp_path / "summary.json"
        write_profile_csv(csv_path, small_report)
        write_json(json_path, small_report.summary())
        assert csv_path.read_text().startswith("q,estimate,exact,rel_err\n")
        assert json.loads(json_path.read_text())["n"] == 4


class TestSweepReportGenerator:
    def test_full_report(self, small_sweep):
        """Test the HTML report holds every chart and the accuracy table."""
        generator = SweepReportGenerator(alpha0=0.001, m=32, n=2000)
        html = generator.generate_full_report(small_sweep)
        assert html.startswith("<!DOCTYPE html>")
        for div in ('id="collapses"', 'id="runtime"', 'id="error-profile"'):
            assert div in html
        assert "exponential(3.5)" in html
        assert "<table>" in html

    def test_accuracy_table_lists_policies(self, small_sweep):
        """Test the accuracy table has a column per policy."""
        generator = SweepReportGenerator(alpha0=0.001, m=32, n=2000)
        table = generator.generate_accuracy_table(small_sweep)
        assert "dd-first q0" in table
        assert "uniform q0" in table

    def test_save_report(self, tmp_path, small_sweep):
        """Test save_report writes to the requested path."""
        generator = SweepReportGenerator(alpha0=0.001, m=32, n=2000)
        target = tmp_path / "sweep.html"
        assert generator.save_report(small_sweep, target) == str(target)
        assert "</html>" in target.read_text()

    def test_save_report_default_name(self, tmp_path, monkeypatch, small_sweep):
        """Test save_report picks a timestamped name in the working directory."""
        monkeypatch.chdir(tmp_path)
        path = SweepReportGenerator(alpha0=0.001, m=32, n=2000).save_report(small_sweep)
        assert path.startswith("sweep_report_")
        assert (tmp_path / path).exists()
