"""Experiment report model and its JSON / markdown renderings."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

from libmigrate.analyzer import Ratio

SCHEMA_VERSION = 1

PRE_MIGRATION = "pre-migration"
MANUAL = "manual"
BASELINE_TITLES = {PRE_MIGRATION: "Before Migration", MANUAL: "Manual Migration"}
STRATEGY_TITLES = {"zero-shot": "Zero-Shot", "one-shot": "One-Shot", "chain-of-thought": "Chain Of Thoughts"}
PHASE_TITLES = {"application": "Application Migration Results", "tests": "Tests Migration Results"}


@dataclass
class MetricSet:
    runs_successfully: Optional[bool] = None
    tests_passed: Optional[int] = None
    tests_total: Optional[int] = None
    lint_score: Optional[float] = None
    typecheck_errors: Optional[int] = None
    migrated_columns: Optional[Ratio] = None
    migrated_methods: Optional[Ratio] = None
    migrated_tests: Optional[Ratio] = None
    errors: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricSet":
        data = dict(data)
        for key in ("migrated_columns", "migrated_methods", "migrated_tests"):
            if data.get(key) is not None:
                data[key] = Ratio(**data[key])
        return cls(**data)


@dataclass
class FileOutcome:
    path: str
    status: str  # applied | skipped | failed
    request_digest: Optional[str] = None
    fallback: Optional[str] = None
    error: Optional[str] = None


@dataclass
class CellResult:
    label: str
    kind: str  # strategy | baseline | fix
    phase: Optional[str]
    metrics: MetricSet
    files: list[FileOutcome] = field(default_factory=list)
    findings: list[dict[str, Any]] = field(default_factory=list)
    exit_codes: dict[str, Optional[int]] = field(default_factory=dict)
    workspace_digest: Optional[str] = None
    error: Optional[str] = None

    @property
    def key(self) -> str:
        key = f"{self.label}.{self.phase}" if self.phase else self.label
        return f"{key}.fix" if self.kind == "fix" else key

    @property
    def completed(self) -> bool:
        return self.error is None and all(f.status != "failed" for f in self.files)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CellResult":
        data = dict(data)
        data["metrics"] = MetricSet.from_dict(data["metrics"])
        data["files"] = [FileOutcome(**f) for f in data.get("files", [])]
        return cls(**data)


@dataclass
class ExperimentReport:
    phases: list[str]
    rows: list[CellResult] = field(default_factory=list)
    baseline_rows: list[CellResult] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def cell(self, label: str, phase: Optional[str] = None, kind: Optional[str] = None) -> CellResult:
        for row in (*self.rows, *self.baseline_rows):
            if row.label == label and (phase is None or row.phase == phase) and (kind is None or row.kind == kind):
                return row
        raise KeyError((label, phase))

    @property
    def completed(self) -> bool:
        return all(r.completed for r in (*self.rows, *self.baseline_rows))

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "phases": list(self.phases),
            "rows": [r.to_dict() for r in self.rows],
            "baseline_rows": [r.to_dict() for r in self.baseline_rows],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentReport":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {version!r}")
        return cls(
            phases=list(data["phases"]),
            rows=[CellResult.from_dict(r) for r in data["rows"]],
            baseline_rows=[CellResult.from_dict(r) for r in data["baseline_rows"]],
            provenance=data.get("provenance", {}),
            schema_version=version,
        )

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.from_dict(json.loads(text))


# rendering


def _yes_no(row: CellResult, value: Optional[bool], metric: str) -> str:
    if metric in row.metrics.errors and value is None:
        return "error"
    return "n/a" if value is None else ("Yes" if value else "No")


def _tests(row: CellResult) -> str:
    m = row.metrics
    if m.tests_passed is None:
        return "error" if "tests" in m.errors else "n/a"
    return f"{m.tests_passed}/{m.tests_total}"


def _lint(row: CellResult) -> str:
    m = row.metrics
    if m.lint_score is None:
        return "error" if "lint" in m.errors else "n/a"
    return f"{m.lint_score:.2f}/10"


def _typecheck(row: CellResult) -> str:
    m = row.metrics
    if m.typecheck_errors is None:
        return "error" if "typecheck" in m.errors else "n/a"
    return f"{m.typecheck_errors} error" + ("" if m.typecheck_errors == 1 else "s")


def _ratio(row: CellResult, value: Optional[Ratio]) -> str:
    # nothing was migrated in the original tree
    if row.label == PRE_MIGRATION:
        return "-"
    return "n/a" if value is None else str(value)


def _title(row: CellResult) -> str:
    if row.kind == "baseline":
        return BASELINE_TITLES.get(row.label, row.label)
    title = STRATEGY_TITLES.get(row.label, row.label)
    return f"{title} (with fix)" if row.kind == "fix" else title


def _markdown_table(report: ExperimentReport, phase: str) -> list[str]:
    if phase == "tests":
        header = ["Metrics", "Migrated Tests", "Tests that Pass"]

        def cells(row: CellResult) -> list[str]:
            return [_title(row), _ratio(row, row.metrics.migrated_tests), _tests(row)]
    else:
        header = ["Metrics", "Runs Successfully", "Tests", "Lint", "Type Check",
                  "Migrated Columns", "Migrated Methods"]

        def cells(row: CellResult) -> list[str]:
            m = row.metrics
            return [_title(row), _yes_no(row, m.runs_successfully, "smoke"), _tests(row), _lint(row),
                    _typecheck(row), _ratio(row, m.migrated_columns), _ratio(row, m.migrated_methods)]

    lines = [f"## {PHASE_TITLES.get(phase, phase)}", "",
             "| " + " | ".join(header) + " |",
             "|" + "|".join(["---"] + [":---:"] * (len(header) - 1)) + "|"]
    rows = list(report.baseline_rows) + [r for r in report.rows if r.phase == phase]
    for row in rows:
        values = cells(row) if row.error is None else [_title(row)] + ["error"] * (len(header) - 1)
        lines.append("| " + " | ".join(values) + " |")
    lines.append("")
    return lines


def emit_report(report: ExperimentReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "markdown":
        lines: list[str] = []
        for phase in report.phases or ["application"]:
            lines.extend(_markdown_table(report, phase))
        failed = [r for r in (*report.baseline_rows, *report.rows) if not r.completed]
        if failed:
            lines.append("Incomplete cells:")
            for row in failed:
                reasons = [row.error] if row.error else [f"{f.path}: {f.error}" for f in row.files if f.status == "failed"]
                lines.append(f"- {row.key}: " + "; ".join(reasons))
            lines.append("")
        return "\n".join(lines)
    raise ValueError(f"unknown report format {fmt!r}")
