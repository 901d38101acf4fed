"""Experiment configuration (YAML) for ``migrate run``."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from libmigrate.analyzer import TargetsManifest
from libmigrate.errors import ConfigError
from libmigrate.gateway import Mode
from libmigrate.prompts import PromptTemplate, Strategy, template_from_mapping
from libmigrate.toolchain import DEFAULT_TIMEOUT, ToolCommands
from libmigrate.workspace import DEFAULT_TEST_GLOBS, DependencyEdit, Phase

TOOL_KEYS = ("smoke_cmd", "test_cmd", "lint_cmd", "typecheck_cmd", "setup_cmd")


@dataclass(frozen=True)
class ExperimentConfig:
    project_root: Path
    targets: TargetsManifest
    strategies: tuple[Strategy, ...] = tuple(Strategy)
    phases: tuple[Phase, ...] = (Phase.APPLICATION,)
    model_id: str = "gpt-4"
    temperature: float = 0.0
    mode: Mode = Mode.REPLAY
    replay_store: Optional[Path] = None
    baseline_root: Optional[Path] = None
    dependency_edits: tuple[DependencyEdit, ...] = ()
    template: PromptTemplate = field(default_factory=lambda: template_from_mapping({}))
    tools: ToolCommands = field(default_factory=ToolCommands)
    test_globs: tuple[str, ...] = DEFAULT_TEST_GLOBS
    fixes: Mapping[Phase, Path] = field(default_factory=dict)
    config_dir: Path = Path(".")
    jobs: int = 1
    lint_rc: Optional[Path] = None

    def __post_init__(self) -> None:
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if not self.phases:
            raise ConfigError("at least one phase is required")
        if self.mode in (Mode.REPLAY, Mode.RECORD) and self.replay_store is None:
            raise ConfigError(f"{self.mode.value} mode requires replay_store")
        if Phase.TESTS in self.phases and self.baseline_root is None:
            raise ConfigError("the tests phase runs against the manual baseline; set baseline_root")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def with_overrides(self, *, mode: Optional[str] = None, strategies: Optional[list[str]] = None,
                       phases: Optional[list[str]] = None, jobs: Optional[int] = None) -> "ExperimentConfig":
        changes: dict[str, Any] = {}
        if mode:
            changes["mode"] = Mode(mode)
        if strategies:
            changes["strategies"] = tuple(dict.fromkeys(Strategy.parse(s) for s in strategies))
        if phases:
            changes["phases"] = tuple(dict.fromkeys(_phase(p) for p in phases))
        if jobs:
            changes["jobs"] = jobs
        return replace(self, **changes) if changes else self

    @property
    def variables(self) -> dict[str, str]:
        """Placeholders available to tool commands besides ``{workspace}`` and ``{cell}``."""
        lint_rc = self.lint_rc or resources.files("libmigrate").joinpath("data/pylintrc")
        return {"python": sys.executable, "config_dir": str(self.config_dir), "lint_rc": str(lint_rc)}


def _phase(value: str) -> Phase:
    try:
        return Phase(value.strip().lower())
    except ValueError:
        raise ConfigError(f"unknown phase {value!r}") from None


def _command(value: Any, key: str) -> Optional[tuple[str, ...]]:
    if value is None:
        return None
    if isinstance(value, str):
        raise ConfigError(f"{key} must be an argument list, not a string")
    return tuple(str(v) for v in value)


def config_from_mapping(data: Mapping[str, Any], base_dir: Path) -> ExperimentConfig:
    base_dir = base_dir.resolve()

    def path(key: str, required: bool = False) -> Optional[Path]:
        value = data.get(key)
        if value is None:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return None
        p = Path(value)
        return p if p.is_absolute() else base_dir / p

    known = {"project_root", "baseline_root", "targets_manifest", "strategies", "phases", "model_id",
             "temperature", "mode", "replay_store", "dependency_edits", "prompt", "tools", "test_globs",
             "fixes", "jobs"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    tools_data = dict(data.get("tools") or {})
    unknown_tools = set(tools_data) - {*TOOL_KEYS, "timeout", "env", "lint_rc"}
    if unknown_tools:
        raise ConfigError(f"unknown tools keys: {sorted(unknown_tools)}")
    tools = ToolCommands(
        **{k: _command(tools_data.get(k), k) for k in TOOL_KEYS},
        timeout=float(tools_data.get("timeout", DEFAULT_TIMEOUT)),
        env={str(k): str(v) for k, v in (tools_data.get("env") or {}).items()},
    )
    try:
        edits = tuple(DependencyEdit(e["action"], str(e["package"]), str(e.get("version_spec", "")))
                      for e in data.get("dependency_edits") or ())
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"malformed dependency edit: {exc}") from exc

    fixes = {_phase(k): (base_dir / v) for k, v in (data.get("fixes") or {}).items()}
    try:
        mode = Mode(data.get("mode", "replay"))
    except ValueError:
        raise ConfigError(f"unknown mode {data.get('mode')!r}") from None

    return ExperimentConfig(
        project_root=path("project_root", required=True),
        baseline_root=path("baseline_root"),
        targets=TargetsManifest.load(path("targets_manifest", required=True)),
        strategies=tuple(Strategy.parse(s) for s in data.get("strategies") or [s.value for s in Strategy]),
        phases=tuple(_phase(p) for p in data.get("phases") or ["application"]),
        model_id=str(data.get("model_id", "gpt-4")),
        temperature=float(data.get("temperature", 0.0)),
        mode=mode,
        replay_store=path("replay_store"),
        dependency_edits=edits,
        template=template_from_mapping(data.get("prompt") or {}, base_dir),
        tools=tools,
        test_globs=tuple(data.get("test_globs") or DEFAULT_TEST_GLOBS),
        fixes=fixes,
        config_dir=base_dir,
        jobs=int(data.get("jobs", 1)),
        lint_rc=base_dir / tools_data["lint_rc"] if tools_data.get("lint_rc") else None,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text("utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, Mapping):
        raise ConfigError("config must be a mapping")
    return config_from_mapping(data, path.parent)
