"""Experiment driver: one workspace per (strategy, phase) cell.

A cell's tree is the original project with the *other* phase's files taken
from the manual baseline, so application code produced by the model is
evaluated against the manually migrated tests and vice versa. Within the
phase partition every file goes through render, complete, extract and apply,
in sorted path order.
"""

from __future__ import annotations

import logging
import platform
import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from libmigrate import __version__
from libmigrate.analyzer import analyze_tree
from libmigrate.config import ExperimentConfig
from libmigrate.errors import MigrationError
from libmigrate.gateway import CompletionRequest, Gateway, ReplayStore, extract_code
from libmigrate.prompts import Strategy, render
from libmigrate.report import (
    MANUAL,
    PRE_MIGRATION,
    CellResult,
    ExperimentReport,
    FileOutcome,
    MetricSet,
    emit_report,
)
from libmigrate.toolchain import check_tree
from libmigrate.workspace import (
    Phase,
    Workspace,
    apply_dependency_edits,
    apply_file,
    overlay,
    partition,
    partition_paths,
    stage,
    subject_files,
)

log = logging.getLogger(__name__)

CELL_ENV = "MIGRATE_CELL"


def make_gateway(config: ExperimentConfig) -> Gateway:
    store = ReplayStore(config.replay_store) if config.replay_store else None
    return Gateway(mode=config.mode, store=store)


def _evaluate(config: ExperimentConfig, workspace: Workspace, result: CellResult, logs_dir: Optional[Path]) -> None:
    """Fill in analyzer and toolchain metrics for a finished tree."""
    analysis = analyze_tree(workspace.root_path, config.targets)
    metrics = result.metrics
    metrics.migrated_columns = analysis.migrated_columns
    metrics.migrated_methods = analysis.migrated_methods
    metrics.migrated_tests = analysis.migrated_tests
    for err in analysis.parse_errors:
        metrics.errors.setdefault("analysis", "")
        metrics.errors["analysis"] += f"{err.path}:{err.line}: {err.message}; "
    result.findings = [{"kind": f.kind.value, "path": f.path, "line": f.line, "detail": f.detail}
                       for f in analysis.findings]

    outcome = check_tree(workspace.root_path, config.tools,
                         variables={**config.variables, "cell": result.key},
                         extra_env={CELL_ENV: result.key})
    metrics.runs_successfully = outcome.runs_successfully
    metrics.tests_passed = outcome.tests_passed
    metrics.tests_total = outcome.tests_total
    metrics.lint_score = outcome.lint_score
    metrics.typecheck_errors = outcome.typecheck_errors
    metrics.errors.update(outcome.errors)
    result.exit_codes = outcome.exit_codes
    if logs_dir is not None:
        cell_logs = logs_dir / result.key
        cell_logs.mkdir(parents=True, exist_ok=True)
        for name, text in outcome.raw_logs.items():
            (cell_logs / f"{name}.log").write_text(text, "utf-8")
    result.workspace_digest = workspace.digest()


def prepare_workspace(config: ExperimentConfig, phase: Phase, scratch: Path, name: str) -> Workspace:
    workspace = stage(config.project_root, scratch, name)
    if config.baseline_root is not None:
        counterpart = partition_paths(subject_files(config.baseline_root), phase.counterpart, config.test_globs)
        overlay(workspace, config.baseline_root, counterpart.included)
    return apply_dependency_edits(workspace, config.dependency_edits)


def migrate_files(config: ExperimentConfig, gateway: Gateway, strategy: Strategy, phase: Phase,
                  workspace: Workspace) -> tuple[Workspace, list[FileOutcome]]:
    outcomes = []
    for path in partition(workspace, phase, config.test_globs).included:
        subject = workspace.read(path)
        if not subject.strip():
            outcomes.append(FileOutcome(path, "skipped"))
            continue
        digest = None
        try:
            prompt = render(strategy, config.template, subject.rstrip("\n"))
            request = CompletionRequest.from_prompt(config.model_id, prompt, config.temperature)
            digest = request.digest
            raw = gateway.complete(request)
            extracted = extract_code(raw, config.template.start_marker, config.template.end_marker)
            workspace = apply_file(workspace, path, extracted.code + "\n")
        except MigrationError as exc:
            log.warning("%s/%s: %s failed: %s", strategy.value, phase.value, path, exc)
            outcomes.append(FileOutcome(path, "failed", digest, error=f"{type(exc).__name__}: {exc}"))
            continue
        outcomes.append(FileOutcome(path, "applied", digest, fallback=extracted.fallback_used.value))
    return workspace, outcomes


def run_phase(config: ExperimentConfig, strategy: Strategy, phase: Phase, gateway: Gateway,
              out_dir: Path) -> tuple[Optional[Workspace], CellResult]:
    result = CellResult(label=strategy.value, kind="strategy", phase=phase.value, metrics=MetricSet())
    workspace = None
    try:
        workspace = prepare_workspace(config, phase, out_dir / "workspaces", result.key)
        workspace, result.files = migrate_files(config, gateway, strategy, phase, workspace)
        _evaluate(config, workspace, result, out_dir / "logs")
    except MigrationError as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    return workspace, result


def run_fix(config: ExperimentConfig, source: Workspace, base: CellResult, out_dir: Path) -> CellResult:
    """Re-evaluate a cell's tree after overlaying the configured manual fix."""
    fix_dir = config.fixes[Phase(base.phase)]
    result = CellResult(label=base.label, kind="fix", phase=base.phase, metrics=MetricSet())
    try:
        dest = out_dir / "workspaces" / result.key
        if dest.exists():
            shutil.rmtree(dest)
        workspace = stage(source.root_path, dest.parent, dest.name)
        overlay(workspace, fix_dir, subject_files(fix_dir))
        _evaluate(config, workspace, result, out_dir / "logs")
    except MigrationError as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def run_baseline(config: ExperimentConfig, tree: Path, label: str, out_dir: Path) -> CellResult:
    result = CellResult(label=label, kind="baseline", phase=None, metrics=MetricSet())
    try:
        workspace = stage(tree, out_dir / "workspaces", f"baseline.{label}")
        _evaluate(config, workspace, result, out_dir / "logs")
    except MigrationError as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def run_experiment(config: ExperimentConfig, out_dir: str | Path, gateway: Optional[Gateway] = None) -> ExperimentReport:
    """Run every configured cell plus the baselines and persist the report.

    Writes ``report.json``, ``report.md``, per-tool logs under ``logs/`` and
    the final trees under ``workspaces/``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gateway = gateway or make_gateway(config)

    def cell(job: tuple[Strategy, Phase]) -> list[CellResult]:
        strategy, phase = job
        workspace, result = run_phase(config, strategy, phase, gateway, out_dir)
        results = [result]
        if workspace is not None and result.error is None and phase in config.fixes:
            results.append(run_fix(config, workspace, result, out_dir))
        return results

    jobs = [(s, p) for p in config.phases for s in config.strategies]
    baselines = [(config.project_root, PRE_MIGRATION)]
    if config.baseline_root is not None:
        baselines.append((config.baseline_root, MANUAL))

    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        baseline_futures = [pool.submit(run_baseline, config, tree, label, out_dir) for tree, label in baselines]
        cell_futures = [pool.submit(cell, job) for job in jobs]
        baseline_rows = [f.result() for f in baseline_futures]
        rows = [r for f in cell_futures for r in f.result()]

    report = ExperimentReport(
        phases=[p.value for p in config.phases],
        rows=rows,
        baseline_rows=baseline_rows,
        provenance=_provenance(config, gateway, rows),
    )
    (out_dir / "report.json").write_text(emit_report(report, "json"), "utf-8")
    (out_dir / "report.md").write_text(emit_report(report, "markdown"), "utf-8")
    gateway.close()
    return report


def _provenance(config: ExperimentConfig, gateway: Gateway, rows: list[CellResult]) -> dict:
    digests = sorted({f.request_digest for r in rows for f in r.files if f.request_digest})
    completions = []
    for digest in digests:
        record = gateway.store.get(digest) if gateway.store is not None else None
        completions.append({"digest": digest, "created_at": record.created_at if record else None})
    return {
        "harness_version": __version__,
        "python_version": platform.python_version(),
        "mode": config.mode.value,
        "model_id": config.model_id,
        "temperature": config.temperature,
        "completions": completions,
    }
