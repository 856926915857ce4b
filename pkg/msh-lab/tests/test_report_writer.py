"""Tests for run reports, schema validation and file output."""

import csv
import json
import math

import numpy as np
import pytest
from jsonschema import ValidationError

from lab.output.report_writer import (
    CheckRecord,
    Provenance,
    ReportWriter,
    RunReport,
    to_jsonable,
    validate_report,
)

HASH = "ab" * 32


def record(name="c1", passed=True, informational=False, **measured):
    return CheckRecord(
        name=name,
        experiment="minimal",
        anchor="claim",
        measured=measured or {"value": 1.0},
        expected={"value": 1.0},
        provenance=Provenance.PAPER,
        passed=passed,
        runtime=0.25,
        informational=informational,
    )


@pytest.fixture
def report():
    rep = RunReport("minimal", HASH, 42)
    rep.add(record("ok"))
    rep.add(record("bad", passed=False))
    rep.add(record("info", passed=False, informational=True))
    return rep


class TestJsonable:
    def test_numpy_values(self):
        data = to_jsonable({"a": np.float64(1.5), "b": np.int64(3), "c": np.array([1, 2]), "d": np.bool_(True)})
        assert data == {"a": 1.5, "b": 3, "c": [1, 2], "d": True}
        assert type(data["b"]) is int

    def test_non_finite(self):
        assert to_jsonable([math.nan, math.inf, -math.inf]) == ["nan", "inf", "-inf"]

    def test_complex_and_enum(self):
        assert to_jsonable(1 + 2j) == [1.0, 2.0]
        assert to_jsonable(Provenance.DERIVED) == "DERIVED"


class TestRunReport:
    def test_summary_ignores_informational(self, report):
        assert report.summary() == {"total": 3, "passed": 1, "failed": 1, "informational": 1}
        assert not report.passed
        assert [r.name for r in report.failures] == ["bad"]

    def test_informational_failure_does_not_fail(self):
        rep = RunReport("minimal", HASH, 1)
        rep.add(record("info", passed=False, informational=True))
        assert rep.passed

    def test_duplicate_artifact(self, report):
        report.add_artifact("rows", [])
        with pytest.raises(ValueError):
            report.add_artifact("rows", [])

    def test_runtime_can_be_zeroed(self, report):
        data = report.to_dict(include_runtime=False)
        assert all(check["runtime"] == 0.0 for check in data["checks"])
        assert report.to_dict()["checks"][0]["runtime"] == 0.25

    def test_schema(self, report):
        validate_report(report.to_dict())

    def test_schema_rejects_bad_hash(self, report):
        data = report.to_dict()
        data["config_hash"] = "xyz"
        with pytest.raises(ValidationError):
            validate_report(data)

    def test_schema_rejects_unknown_provenance(self, report):
        data = report.to_dict()
        data["checks"][0]["provenance"] = "STATED"
        with pytest.raises(ValidationError):
            validate_report(data)

    def test_provenance_tags(self, report):
        assert {p.value for p in Provenance} == {"PAPER", "DERIVED", "TRIVIAL"}
        data = report.to_dict()
        assert data["checks"][0]["provenance"] == "PAPER"
        validate_report(data)


class TestReportWriter:
    def test_both_formats(self, report, tmp_path):
        report.add_artifact("series", [{"s": 0.1, "value": 1.0}, {"s": 0.05, "value": 1.0, "extra": 2}])
        report.add_artifact("certificate", {"radius": 0.2, "values": np.array([1.0, math.nan])})
        writer = ReportWriter(tmp_path / "run", "both")
        paths = writer.write(report, {"seed": 42})
        names = sorted(p.name for p in paths)
        assert names == ["certificate.json", "checks.csv", "config.json", "report.json", "series.csv"]

        data = json.loads((tmp_path / "run" / "report.json").read_text())
        assert data["summary"]["failed"] == 1
        assert data["artifacts"] == ["certificate", "series"]
        cert = json.loads((tmp_path / "run" / "certificate.json").read_text())
        assert cert["values"] == [1.0, "nan"]

        with open(tmp_path / "run" / "series.csv") as f:
            rows = list(csv.DictReader(f))
        assert rows[0].keys() == {"s", "value", "extra"}
        assert rows[1]["extra"] == "2"

    def test_csv_only(self, report, tmp_path):
        paths = ReportWriter(tmp_path, "csv").write(report)
        assert [p.name for p in paths] == ["checks.csv"]
        with open(tmp_path / "checks.csv") as f:
            rows = list(csv.DictReader(f))
        assert [r["name"] for r in rows] == ["ok", "bad", "info"]
        assert json.loads(rows[0]["measured"]) == {"value": 1.0}

    def test_json_only(self, report, tmp_path):
        paths = ReportWriter(tmp_path, "json").write(report)
        assert [p.name for p in paths] == ["report.json"]

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            ReportWriter(tmp_path, "xml")

    def test_invalid_report_writes_nothing(self, tmp_path):
        rep = RunReport("minimal", "not-a-hash", 1)
        with pytest.raises(ValidationError):
            ReportWriter(tmp_path / "run", "both").write(rep)
        assert not (tmp_path / "run").exists()

    def test_display_summary(self, report, tmp_path):
        from rich.console import Console

        console = Console(record=True, width=120)
        ReportWriter(tmp_path, "both", console).display_summary(report)
        text = console.export_text()
        assert "bad" in text
        assert "1 passed, 1 failed, 1 informational" in text
