"""Run the subject project's own tools and turn their output into metrics.

Parsers are pure functions over captured text:

* test summary: the last line carrying pytest-style ``<N> passed``,
  ``<N> failed``, ``<N> error(s)`` counts, or ``no tests ran``;
* lint score: ``rated at (-?\\d+\\.\\d{2})/10``, first match on the last line
  that has one;
* type-check errors: ``^(?:Found )?(\\d+) errors?`` on the last summary line
  (pyright's ``N errors, M warnings, K informations`` or mypy's
  ``Found N errors in M files``); ``Success: no issues found`` reads as zero.
"""

from __future__ import annotations

import logging
import os
import re
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from libmigrate.errors import ToolTimeout, UnparseableOutput

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0

_TEST_COUNT = re.compile(r"(\d+) (passed|failed|errors?|skipped|xfailed|xpassed|deselected|warnings?)\b")
_NO_TESTS = re.compile(r"\bno tests ran\b")
_LINT_RATING = re.compile(r"rated at (-?\d+\.\d{2})/10")
_TYPECHECK_SUMMARY = re.compile(r"^(?:Found )?(\d+) errors?\b(?:,| in |\s*$)")
_TYPECHECK_CLEAN = re.compile(r"^Success: no issues found")


@dataclass(frozen=True)
class ToolInvocation:
    command: tuple[str, ...]
    working_dir: Path
    timeout: float = DEFAULT_TIMEOUT
    env_overrides: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.command:
            raise ValueError("command must be non-empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        object.__setattr__(self, "command", tuple(self.command))


@dataclass(frozen=True)
class ToolRun:
    command: tuple[str, ...]
    exit_code: Optional[int]
    stdout: str
    stderr: str
    timed_out: bool = False

    @property
    def output(self) -> str:
        return self.stdout + self.stderr

    @property
    def log(self) -> str:
        status = "TIMEOUT" if self.timed_out else f"exit {self.exit_code}"
        return (f"$ {' '.join(self.command)}\n[{status}]\n--- stdout ---\n{self.stdout}"
                f"--- stderr ---\n{self.stderr}")


def execute(invocation: ToolInvocation) -> ToolRun:
    env = {**os.environ, "PYTHONDONTWRITEBYTECODE": "1", **invocation.env_overrides}
    try:
        proc = subprocess.run(
            invocation.command,
            cwd=invocation.working_dir,
            env=env,
            capture_output=True,
            text=True,
            timeout=invocation.timeout,
        )
    except subprocess.TimeoutExpired as exc:
        def text(v: bytes | str | None) -> str:
            return v.decode("utf-8", "replace") if isinstance(v, bytes) else (v or "")

        return ToolRun(invocation.command, None, text(exc.stdout), text(exc.stderr), timed_out=True)
    except OSError as exc:
        return ToolRun(invocation.command, 127, "", f"{exc}\n")
    return ToolRun(invocation.command, proc.returncode, proc.stdout, proc.stderr)


# parsers


def parse_test_summary(text: str) -> tuple[int, int]:
    """Return (passed, total) where total counts passes, failures and errors."""
    for line in reversed(text.splitlines()):
        counts = {}
        for number, word in _TEST_COUNT.findall(line):
            key = "errors" if word.startswith("error") else word
            counts[key] = counts.get(key, 0) + int(number)
        if any(k in counts for k in ("passed", "failed", "errors", "skipped", "xfailed", "xpassed", "deselected")):
            passed = counts.get("passed", 0)
            return passed, passed + counts.get("failed", 0) + counts.get("errors", 0)
        if _NO_TESTS.search(line):
            return 0, 0
    raise UnparseableOutput("no test summary line found")


def parse_lint_score(text: str) -> float:
    for line in reversed(text.splitlines()):
        m = _LINT_RATING.search(line)
        if m:
            return float(m.group(1))
    raise UnparseableOutput("no lint rating line found")


def parse_typecheck_errors(text: str) -> int:
    for line in reversed(text.splitlines()):
        stripped = line.strip()
        if _TYPECHECK_CLEAN.match(stripped):
            return 0
        m = _TYPECHECK_SUMMARY.match(stripped)
        if m:
            return int(m.group(1))
    raise UnparseableOutput("no type-check summary line found")


# runners


def run_smoke(invocation: ToolInvocation) -> tuple[bool, ToolRun]:
    run = execute(invocation)
    if run.timed_out:
        log.warning("smoke run timed out after %ss", invocation.timeout)
    return (not run.timed_out and run.exit_code == 0), run


def _checked(run: ToolRun, invocation: ToolInvocation) -> ToolRun:
    if run.timed_out:
        raise ToolTimeout(f"{' '.join(invocation.command)} exceeded {invocation.timeout}s")
    return run


def run_tests(invocation: ToolInvocation) -> tuple[tuple[int, int], ToolRun]:
    run = _checked(execute(invocation), invocation)
    return parse_test_summary(run.output), run


def run_lint(invocation: ToolInvocation) -> tuple[float, ToolRun]:
    run = _checked(execute(invocation), invocation)
    return parse_lint_score(run.output), run


def run_typecheck(invocation: ToolInvocation) -> tuple[int, ToolRun]:
    run = _checked(execute(invocation), invocation)
    return parse_typecheck_errors(run.output), run


# whole-tree check


@dataclass(frozen=True)
class ToolCommands:
    smoke_cmd: Optional[Sequence[str]] = None
    test_cmd: Optional[Sequence[str]] = None
    lint_cmd: Optional[Sequence[str]] = None
    typecheck_cmd: Optional[Sequence[str]] = None
    setup_cmd: Optional[Sequence[str]] = None
    timeout: float = DEFAULT_TIMEOUT
    env: Mapping[str, str] = field(default_factory=dict)


@dataclass
class CheckOutcome:
    runs_successfully: Optional[bool] = None
    tests_passed: Optional[int] = None
    tests_total: Optional[int] = None
    lint_score: Optional[float] = None
    typecheck_errors: Optional[int] = None
    exit_codes: dict[str, Optional[int]] = field(default_factory=dict)
    raw_logs: dict[str, str] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)


def _expand(command: Sequence[str], variables: Mapping[str, str]) -> tuple[str, ...]:
    return tuple(str(part).format_map(variables) for part in command)


def check_tree(root: str | Path, commands: ToolCommands, variables: Mapping[str, str] | None = None,
               extra_env: Mapping[str, str] | None = None) -> CheckOutcome:
    """Run every configured tool in ``root``, one at a time.

    ``{name}`` placeholders in commands and env values are filled from
    ``variables``. A tool that is not configured leaves its metric absent; a
    tool that fails to produce parseable output records an error instead.
    """
    root = Path(root)
    variables = {"workspace": str(root), **(variables or {})}
    env = {k: str(v).format_map(variables) for k, v in commands.env.items()}
    env.update(extra_env or {})
    outcome = CheckOutcome()

    def invocation(cmd: Sequence[str]) -> ToolInvocation:
        return ToolInvocation(_expand(cmd, variables), root, commands.timeout, env)

    def record(name: str, run: ToolRun) -> None:
        outcome.exit_codes[name] = run.exit_code
        outcome.raw_logs[name] = run.log

    if commands.setup_cmd:
        run = execute(invocation(commands.setup_cmd))
        record("setup", run)
        if run.timed_out or run.exit_code != 0:
            outcome.errors["setup"] = "setup command failed" + (" (timeout)" if run.timed_out else "")

    if commands.smoke_cmd:
        ok, run = run_smoke(invocation(commands.smoke_cmd))
        record("smoke", run)
        outcome.runs_successfully = ok
        if run.timed_out:
            outcome.errors["smoke"] = "timeout"

    parsed = (("tests", commands.test_cmd), ("lint", commands.lint_cmd), ("typecheck", commands.typecheck_cmd))
    for name, cmd in parsed:
        if not cmd:
            continue
        inv = invocation(cmd)
        run = execute(inv)
        record(name, run)
        try:
            if run.timed_out:
                raise ToolTimeout(f"exceeded {inv.timeout}s")
            if name == "tests":
                outcome.tests_passed, outcome.tests_total = parse_test_summary(run.output)
            elif name == "lint":
                outcome.lint_score = parse_lint_score(run.output)
            else:
                outcome.typecheck_errors = parse_typecheck_errors(run.output)
        except (ToolTimeout, UnparseableOutput) as exc:
            outcome.errors[name] = f"{type(exc).__name__}: {exc}"
    return outcome
