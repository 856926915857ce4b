"""
Report Writer Module

Collects check records into a run report, validates it against the report
schema and writes JSON/CSV files plus artifacts into the run directory.
Also renders the console summary table.
"""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonschema
import numpy as np
from jsonschema import ValidationError
from rich.console import Console
from rich.table import Table

logger = logging.getLogger(__name__)


class Provenance(str, Enum):
    """Where an expected value comes from."""
    PAPER = "PAPER"
    TRIVIAL = "TRIVIAL"
    DERIVED = "DERIVED"


REPORT_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["experiment", "config_hash", "seed", "passed", "summary", "checks"],
    "properties": {
        "experiment": {"type": "string"},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "seed": {"type": "integer", "minimum": 0},
        "passed": {"type": "boolean"},
        "summary": {
            "type": "object",
            "required": ["total", "passed", "failed", "informational"],
            "additionalProperties": {"type": "integer", "minimum": 0},
        },
        "artifacts": {"type": "array", "items": {"type": "string"}},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "name", "experiment", "anchor", "measured", "expected",
                    "provenance", "passed", "runtime", "informational",
                ],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "experiment": {"type": "string"},
                    "anchor": {"type": "string", "minLength": 1},
                    "measured": {"type": "object"},
                    "expected": {"type": "object"},
                    "provenance": {"enum": [p.value for p in Provenance]},
                    "passed": {"type": "boolean"},
                    "runtime": {"type": "number", "minimum": 0},
                    "informational": {"type": "boolean"},
                    "note": {"type": "string"},
                },
            },
        },
    },
}

RUNTIME_FIELDS = ("runtime",)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Enum):
        return value.value
    return value


@dataclass
class CheckRecord:
    """One verified claim."""
    name: str
    experiment: str
    anchor: str
    measured: Dict[str, Any]
    expected: Dict[str, Any]
    provenance: Provenance
    passed: bool
    runtime: float = 0.0
    informational: bool = False
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["provenance"] = Provenance(self.provenance).value
        data["passed"] = bool(self.passed)
        return to_jsonable(data)


@dataclass
class RunReport:
    """All records of one run plus named artifacts."""
    experiment: str
    config_hash: str
    seed: int
    records: List[CheckRecord] = field(default_factory=list)
    artifacts: Dict[str, Any] = field(default_factory=dict)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        icon = "✅" if record.passed else ("📋" if record.informational else "❌")
        logger.info(f"{icon} {record.name}")
        return record

    def add_artifact(self, name: str, payload: Any) -> None:
        if name in self.artifacts:
            raise ValueError(f"duplicate artifact name {name!r}")
        self.artifacts[name] = payload

    @property
    def failures(self) -> List[CheckRecord]:
        return [r for r in self.records if not r.passed and not r.informational]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> Dict[str, int]:
        informational = sum(1 for r in self.records if r.informational)
        failed = len(self.failures)
        return {
            "total": len(self.records),
            "passed": len(self.records) - informational - failed,
            "failed": failed,
            "informational": informational,
        }

    def to_dict(self, include_runtime: bool = True) -> Dict[str, Any]:
        checks = [r.to_dict() for r in self.records]
        if not include_runtime:
            for check in checks:
                for key in RUNTIME_FIELDS:
                    check[key] = 0.0
        return {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "seed": int(self.seed),
            "passed": self.passed,
            "summary": self.summary(),
            "artifacts": sorted(self.artifacts),
            "checks": checks,
        }


def validate_report(data: Dict[str, Any]) -> None:
    """Raise ValidationError if the report does not match REPORT_SCHEMA."""
    jsonschema.validate(instance=data, schema=REPORT_SCHEMA)


class ReportWriter:
    """
    Writes run reports and artifacts to a run directory and prints summaries.
    """

    CSV_COLUMNS = [
        "experiment", "name", "anchor", "provenance", "passed",
        "informational", "runtime", "measured", "expected", "note",
    ]

    def __init__(self, directory: Path, fmt: str = "both", console: Optional[Console] = None):
        """
        Initialize the report writer.

        Args:
            directory: Run directory (created on first write)
            fmt: One of csv, json, both
            console: Rich console for the summary table
        """
        if fmt not in ("csv", "json", "both"):
            raise ValueError(f"unknown report format {fmt!r}")
        self.directory = Path(directory)
        self.fmt = fmt
        self.console = console or Console()
        logger.debug(f"Initialized report writer for {self.directory}")

    def write(self, report: RunReport, effective_config: Optional[Dict[str, Any]] = None) -> List[Path]:
        """
        Write report files and artifacts.

        Args:
            report: The run report
            effective_config: Config dump stored next to the report

        Returns:
            Paths written
        """
        data = report.to_dict()
        try:
            validate_report(data)
        except ValidationError as e:
            logger.error(f"❌ Report failed schema validation: {e.message}")
            raise

        self.directory.mkdir(parents=True, exist_ok=True)
        written: List[Path] = []
        if effective_config is not None:
            written.append(self._write_json("config.json", effective_config))
        if self.fmt in ("json", "both"):
            written.append(self._write_json("report.json", data))
        if self.fmt in ("csv", "both"):
            written.append(self._write_checks_csv(report))
        for name in sorted(report.artifacts):
            written.append(self._write_artifact(name, report.artifacts[name]))
        logger.info(f"📋 Wrote {len(written)} files to {self.directory}")
        return written

    def _write_json(self, name: str, payload: Any) -> Path:
        path = self.directory / name
        with open(path, "w") as f:
            json.dump(to_jsonable(payload), f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    def _write_rows(self, name: str, rows: List[Dict[str, Any]]) -> Path:
        path = self.directory / name
        columns: List[str] = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        return path

    def _write_checks_csv(self, report: RunReport) -> Path:
        rows = []
        for record in report.records:
            data = record.to_dict()
            rows.append({col: data.get(col, "") for col in self.CSV_COLUMNS})
        return self._write_rows("checks.csv", rows)

    def _write_artifact(self, name: str, payload: Any) -> Path:
        # Row lists become plot-ready CSV tables; everything else is JSON.
        if isinstance(payload, list) and payload and all(isinstance(r, dict) for r in payload):
            return self._write_rows(f"{name}.csv", payload)
        return self._write_json(f"{name}.json", payload)

    def display_summary(self, report: RunReport) -> None:
        """Print a table of checks and a one-line verdict."""
        table = Table(title=f"Check Summary: {report.experiment}", show_header=True, header_style="bold")
        table.add_column("Status", width=6)
        table.add_column("Check", style="cyan")
        table.add_column("Provenance", style="dim")
        table.add_column("Runtime (s)", justify="right")

        for record in report.records:
            if record.informational:
                status = "ℹ️"
            else:
                status = "✅" if record.passed else "❌"
            table.add_row(status, record.name, Provenance(record.provenance).value, f"{record.runtime:.2f}")

        self.console.print(table)
        counts = report.summary()
        colour = "green" if report.passed else "red"
        self.console.print(
            f"[bold {colour}]{counts['passed']} passed, {counts['failed']} failed, "
            f"{counts['informational']} informational[/bold {colour}]"
        )


def _csv_cell(value: Any) -> Any:
    value = to_jsonable(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value
