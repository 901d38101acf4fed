"""Staged copies of a client project and the edits applied to them."""

from __future__ import annotations

import dataclasses
import fnmatch
import hashlib
import os
import re
import shutil
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import Iterable, Optional, Sequence

from libmigrate.errors import (
    EmptyProject,
    IoFailure,
    ManifestNotFound,
    PackageNotFound,
    PathEscape,
)

SUBJECT_SUFFIXES = (".py",)
DEFAULT_TEST_GLOBS = ("tests/**", "test_*.py", "*_test.py")
IGNORED_DIRS = frozenset({
    ".git", ".hg", ".venv", "venv", "__pycache__", ".pytest_cache", ".mypy_cache",
    ".ruff_cache", "node_modules", ".tox",
})


class Phase(str, Enum):
    APPLICATION = "application"
    TESTS = "tests"

    @property
    def counterpart(self) -> "Phase":
        return Phase.TESTS if self is Phase.APPLICATION else Phase.APPLICATION


def iter_files(root: Path) -> list[str]:
    """Relative POSIX paths of every non-ignored file under ``root``, sorted."""
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in IGNORED_DIRS)
        for name in filenames:
            rel = Path(dirpath, name).relative_to(root)
            found.append(rel.as_posix())
    return sorted(found)


def tree_digest(root: str | Path) -> str:
    """SHA-256 over sorted (path, bytes) pairs."""
    root = Path(root)
    h = hashlib.sha256()
    for rel in iter_files(root):
        data = (root / rel).read_bytes()
        h.update(rel.encode("utf-8") + b"\0")
        h.update(str(len(data)).encode("ascii") + b"\0")
        h.update(data)
    return h.hexdigest()


def subject_files(root: str | Path) -> list[str]:
    return [p for p in iter_files(Path(root)) if p.endswith(SUBJECT_SUFFIXES)]


@dataclass(frozen=True)
class Workspace:
    root_path: Path
    origin: Path
    origin_digest: str
    applied_files: frozenset[str] = frozenset()

    def resolve(self, path: str | Path) -> Path:
        root = self.root_path.resolve()
        target = (root / path).resolve()
        if target != root and root not in target.parents:
            raise PathEscape(f"{path} resolves outside {root}")
        return target

    def read(self, path: str) -> str:
        try:
            return self.resolve(path).read_text("utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc

    def digest(self) -> str:
        return tree_digest(self.root_path)

    def subject_files(self) -> list[str]:
        return subject_files(self.root_path)


def stage(project_root: str | Path, scratch_dir: str | Path | None = None,
          name: Optional[str] = None) -> Workspace:
    """Copy ``project_root`` into a fresh directory under ``scratch_dir``.

    An existing directory of the same name is replaced. The origin is only
    read.
    """
    origin = Path(project_root)
    if not origin.is_dir():
        raise IoFailure(f"project root {origin} is not a directory")
    if not subject_files(origin):
        raise EmptyProject(f"{origin} contains no {'/'.join(SUBJECT_SUFFIXES)} files")
    try:
        if name is None:
            base = Path(scratch_dir) if scratch_dir else None
            if base is not None:
                base.mkdir(parents=True, exist_ok=True)
            dest = Path(tempfile.mkdtemp(prefix="ws-", dir=base))
            dest.rmdir()
        else:
            dest = Path(scratch_dir or tempfile.gettempdir()) / name
            if dest.exists():
                shutil.rmtree(dest)
        shutil.copytree(origin, dest, ignore=shutil.ignore_patterns(*IGNORED_DIRS))
    except OSError as exc:
        raise IoFailure(f"staging {origin} failed: {exc}") from exc
    return Workspace(root_path=dest, origin=origin, origin_digest=tree_digest(origin))


# partitioning


@dataclass(frozen=True)
class PhasePartition:
    phase: Phase
    included: tuple[str, ...]
    excluded: tuple[str, ...]


def _glob_to_regex(pattern: str) -> re.Pattern[str]:
    out, i = [], 0
    while i < len(pattern):
        if pattern.startswith("**/", i):
            out.append("(?:.*/)?")
            i += 3
        elif pattern.startswith("**", i):
            out.append(".*")
            i += 2
        elif pattern[i] == "*":
            out.append("[^/]*")
            i += 1
        elif pattern[i] == "?":
            out.append("[^/]")
            i += 1
        else:
            out.append(re.escape(pattern[i]))
            i += 1
    return re.compile("".join(out) + r"\Z")


def is_test_path(path: str, test_globs: Sequence[str]) -> bool:
    """Match a relative path against the globs.

    Patterns containing a slash match the full path (``**`` spans
    directories); bare patterns match the basename.
    """
    for pattern in test_globs:
        if "/" in pattern:
            if _glob_to_regex(pattern).match(path):
                return True
        elif fnmatch.fnmatchcase(PurePosixPath(path).name, pattern):
            return True
    return False


def partition_paths(paths: Iterable[str], phase: Phase, test_globs: Sequence[str]) -> PhasePartition:
    if not test_globs:
        raise ValueError("test_globs must be non-empty")
    phase = Phase(phase)
    included, excluded = [], []
    for path in sorted(paths):
        wanted = is_test_path(path, test_globs) == (phase is Phase.TESTS)
        (included if wanted else excluded).append(path)
    return PhasePartition(phase, tuple(included), tuple(excluded))


def partition(workspace: Workspace, phase: Phase, test_globs: Sequence[str] = DEFAULT_TEST_GLOBS) -> PhasePartition:
    return partition_paths(workspace.subject_files(), phase, test_globs)


# applying content


def atomic_write(target: Path, data: bytes) -> None:
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        if target.exists():
            shutil.copymode(target, tmp)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def apply_file(workspace: Workspace, path: str, code: str) -> Workspace:
    """Replace one file's content atomically and record it as applied."""
    target = workspace.resolve(path)
    rel = target.relative_to(workspace.root_path.resolve()).as_posix()
    try:
        atomic_write(target, code.encode("utf-8"))
    except OSError as exc:
        raise IoFailure(f"writing {rel} failed: {exc}") from exc
    return dataclasses.replace(workspace, applied_files=workspace.applied_files | {rel})


def overlay(workspace: Workspace, source_root: str | Path, paths: Iterable[str]) -> None:
    """Copy ``paths`` from another tree over the workspace (evaluation setup, not applied)."""
    source_root = Path(source_root)
    for rel in paths:
        src = source_root / rel
        target = workspace.resolve(rel)
        try:
            atomic_write(target, src.read_bytes())
        except OSError as exc:
            raise IoFailure(f"overlaying {rel} failed: {exc}") from exc


# dependency manifests


class EditAction(str, Enum):
    ADD = "add"
    BUMP = "bump"


@dataclass(frozen=True)
class DependencyEdit:
    action: EditAction
    package: str
    version_spec: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "action", EditAction(self.action))
        if not self.package.strip():
            raise ValueError("package name must be non-empty")
        if self.action is EditAction.BUMP and not self.version_spec.strip():
            raise ValueError(f"{self.action.value} of {self.package} needs a version spec")


# (file name, table header holding the dependencies)
MANIFEST_DIALECTS = (
    ("pyproject.toml", "tool.poetry.dependencies"),
    ("Pipfile", "packages"),
)

_HEADER = re.compile(r"^\s*\[\s*([^\[\]]+?)\s*\]\s*(#.*)?$")
_ENTRY = re.compile(r'^(?P<indent>\s*)(?P<quote>["\']?)(?P<name>[A-Za-z0-9_.\-]+)(?P=quote)\s*=\s*(?P<value>.*)$')
_INLINE_VERSION = re.compile(r'(version\s*=\s*)(["\'])(.*?)\2')


def _normalize(name: str) -> str:
    return re.sub(r"[-_.]+", "-", name).lower()


def find_manifest(root: Path) -> tuple[Path, str]:
    for filename, table in MANIFEST_DIALECTS:
        path = root / filename
        if path.is_file() and any(
            (m := _HEADER.match(line)) and m.group(1) == table
            for line in path.read_text("utf-8").splitlines()
        ):
            return path, table
    raise ManifestNotFound(f"no recognised dependency manifest in {root}")


def _section_bounds(lines: list[str], table: str) -> tuple[int, int]:
    start = None
    for i, line in enumerate(lines):
        m = _HEADER.match(line)
        if m and start is None and m.group(1) == table:
            start = i + 1
        elif m and start is not None:
            return start, i
    if start is None:
        raise ManifestNotFound(f"table [{table}] missing")
    return start, len(lines)


def edit_manifest_text(text: str, table: str, edits: Sequence[DependencyEdit]) -> str:
    """Apply edits with line-level rewrites, leaving everything else byte-identical."""
    trailing_newline = text.endswith("\n")
    lines = text.split("\n")
    if trailing_newline:
        lines.pop()
    for edit in edits:
        start, end = _section_bounds(lines, table)
        index = None
        for i in range(start, end):
            m = _ENTRY.match(lines[i])
            if m and _normalize(m.group("name")) == _normalize(edit.package):
                index = i
                break
        if edit.action is EditAction.ADD:
            if index is not None:
                continue
            insert_at = end
            while insert_at > start and not lines[insert_at - 1].strip():
                insert_at -= 1
            lines.insert(insert_at, f'{edit.package} = "{edit.version_spec or "*"}"')
        else:
            if index is None:
                raise PackageNotFound(f"{edit.package} not declared in [{table}]")
            m = _ENTRY.match(lines[index])
            value = m.group("value")
            if value.lstrip().startswith("{"):
                if _INLINE_VERSION.search(value):
                    value = _INLINE_VERSION.sub(lambda v: f"{v.group(1)}{v.group(2)}{edit.version_spec}{v.group(2)}", value, count=1)
                else:
                    value = value.replace("{", f'{{ version = "{edit.version_spec}",', 1)
            else:
                comment = ""
                if "#" in value:
                    value, _, rest = value.partition("#")
                    comment = "  #" + rest
                value = f'"{edit.version_spec}"{comment}'
            lines[index] = f'{m.group("indent")}{m.group("quote")}{m.group("name")}{m.group("quote")} = {value}'
    return "\n".join(lines) + ("\n" if trailing_newline else "")


def apply_dependency_edits(workspace: Workspace, edits: Sequence[DependencyEdit]) -> Workspace:
    if not edits:
        return workspace
    path, table = find_manifest(workspace.root_path)
    text = path.read_text("utf-8")
    updated = edit_manifest_text(text, table, edits)
    if updated != text:
        try:
            atomic_write(path, updated.encode("utf-8"))
        except OSError as exc:
            raise IoFailure(f"writing {path.name} failed: {exc}") from exc
    return workspace
