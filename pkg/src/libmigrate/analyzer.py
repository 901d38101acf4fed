"""Static checks that measure how far a tree got through the ORM 2.0 migration.

Everything here is syntactic: a column counts as migrated when its class
attribute is annotated ``Mapped[...]`` and assigned a ``mapped_column(...)``
call, whatever module those names were imported from. Methods and tests are
judged on their signatures and bodies against a targets manifest taken from a
manual reference migration.
"""

from __future__ import annotations

import ast
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import Any, Iterable, Mapping, Optional

import yaml

from libmigrate.errors import ConfigError
from libmigrate.workspace import subject_files

ASYNC_EXTENSION_MODULE = "sqlalchemy.ext.asyncio"
ASYNC_EXTENSION_NAMES = frozenset({
    "create_async_engine", "async_sessionmaker", "async_scoped_session",
    "AsyncSession", "AsyncEngine", "AsyncAttrs",
})


# source model


@dataclass(frozen=True)
class Attribute:
    name: str
    line: int
    annotation: Optional[str]
    annotation_head: Optional[str]
    value_call: Optional[str]


@dataclass(frozen=True)
class ClassInfo:
    name: str
    qualname: str
    line: int
    attributes: tuple[Attribute, ...]


@dataclass(frozen=True)
class Param:
    name: str
    annotated: bool


@dataclass(frozen=True)
class FunctionInfo:
    qualname: str
    line: int
    is_async: bool
    params: tuple[Param, ...]
    returns_annotated: bool
    receiver: Optional[str]
    await_count: int

    @property
    def fully_typed(self) -> bool:
        return self.returns_annotated and all(p.annotated for p in self.params if p.name != self.receiver)


@dataclass(frozen=True)
class ImportInfo:
    module: str
    names: tuple[str, ...]
    line: int
    level: int = 0


@dataclass(frozen=True)
class CallInfo:
    callee: str
    name: str
    line: int
    is_attribute: bool


@dataclass
class FileModel:
    path: str
    module: str
    classes: list[ClassInfo] = field(default_factory=list)
    functions: list[FunctionInfo] = field(default_factory=list)
    imports: list[ImportInfo] = field(default_factory=list)
    calls: list[CallInfo] = field(default_factory=list)
    column_calls: list[CallInfo] = field(default_factory=list)


class SourceSyntaxError(SyntaxError):
    def __init__(self, path: str, line: Optional[int], message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
        self.message = message


@dataclass
class SourceModel:
    files: dict[str, FileModel] = field(default_factory=dict)
    errors: list[SourceSyntaxError] = field(default_factory=list)

    def iter_files(self) -> list[FileModel]:
        return [self.files[p] for p in sorted(self.files)]


def module_name(path: str) -> str:
    parts = list(PurePosixPath(path).with_suffix("").parts)
    if parts and parts[-1] == "__init__":
        parts.pop()
    return ".".join(parts)


def _dotted(node: ast.expr) -> Optional[str]:
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        base = _dotted(node.value)
        return f"{base}.{node.attr}" if base else node.attr
    if isinstance(node, ast.Subscript):
        return _dotted(node.value)
    return None


def _head(node: Optional[ast.expr]) -> Optional[str]:
    """Last component of the outermost name in an annotation: ``so.Mapped[int]`` -> ``Mapped``."""
    if node is None:
        return None
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        try:
            node = ast.parse(node.value, mode="eval").body
        except SyntaxError:
            return None
    dotted = _dotted(node)
    return dotted.rsplit(".", 1)[-1] if dotted else None


def _call_name(call: ast.Call) -> tuple[str, str, bool]:
    callee = _dotted(call.func) or ast.unparse(call.func)
    return callee, callee.rsplit(".", 1)[-1], isinstance(call.func, ast.Attribute)


class _AwaitCounter(ast.NodeVisitor):
    def __init__(self) -> None:
        self.count = 0

    def visit_Await(self, node: ast.Await) -> None:
        self.count += 1
        self.generic_visit(node)

    def visit_AsyncFor(self, node: ast.AsyncFor) -> None:
        self.count += 1
        self.generic_visit(node)

    def visit_AsyncWith(self, node: ast.AsyncWith) -> None:
        self.count += 1
        self.generic_visit(node)

    # awaits inside nested scopes belong to those scopes
    def visit_FunctionDef(self, node: ast.FunctionDef) -> None:
        pass

    visit_AsyncFunctionDef = visit_FunctionDef
    visit_Lambda = visit_FunctionDef
    visit_ClassDef = visit_FunctionDef


class _Collector(ast.NodeVisitor):
    def __init__(self, model: FileModel):
        self.model = model
        self.scope: list[tuple[str, str]] = []  # (kind, name)

    def _qual(self, name: str) -> str:
        return ".".join([n for _, n in self.scope] + [name])

    def visit_ClassDef(self, node: ast.ClassDef) -> None:
        attributes = []
        for stmt in node.body:
            target, annotation, value = None, None, None
            if isinstance(stmt, ast.AnnAssign) and isinstance(stmt.target, ast.Name):
                target, annotation, value = stmt.target.id, stmt.annotation, stmt.value
            elif isinstance(stmt, ast.Assign) and len(stmt.targets) == 1 and isinstance(stmt.targets[0], ast.Name):
                target, value = stmt.targets[0].id, stmt.value
            if target is None:
                continue
            value_call = None
            if isinstance(value, ast.Call):
                callee, name, is_attr = _call_name(value)
                value_call = name
                if name == "Column":
                    self.model.column_calls.append(CallInfo(callee, name, value.lineno, is_attr))
            attributes.append(Attribute(
                name=target,
                line=stmt.lineno,
                annotation=ast.unparse(annotation) if annotation is not None else None,
                annotation_head=_head(annotation),
                value_call=value_call,
            ))
        qualname = self._qual(node.name)
        self.model.classes.append(ClassInfo(node.name, qualname, node.lineno, tuple(attributes)))
        self.scope.append(("class", node.name))
        self.generic_visit(node)
        self.scope.pop()

    def _visit_function(self, node: ast.FunctionDef | ast.AsyncFunctionDef) -> None:
        args = node.args
        params = [Param(a.arg, a.annotation is not None)
                  for a in (*args.posonlyargs, *args.args, *args.kwonlyargs)]
        for extra in (args.vararg, args.kwarg):
            if extra is not None:
                params.append(Param(extra.arg, extra.annotation is not None))
        receiver = None
        in_class = bool(self.scope) and self.scope[-1][0] == "class"
        decorators = {_head(d.func if isinstance(d, ast.Call) else d) for d in node.decorator_list}
        positional = (*args.posonlyargs, *args.args)
        if in_class and "staticmethod" not in decorators and positional:
            receiver = positional[0].arg
        counter = _AwaitCounter()
        for stmt in node.body:
            counter.visit(stmt)
        self.model.functions.append(FunctionInfo(
            qualname=self._qual(node.name),
            line=node.lineno,
            is_async=isinstance(node, ast.AsyncFunctionDef),
            params=tuple(params),
            returns_annotated=node.returns is not None,
            receiver=receiver,
            await_count=counter.count,
        ))
        self.scope.append(("function", node.name))
        self.generic_visit(node)
        self.scope.pop()

    visit_FunctionDef = _visit_function
    visit_AsyncFunctionDef = _visit_function

    def visit_Import(self, node: ast.Import) -> None:
        for alias in node.names:
            self.model.imports.append(ImportInfo(alias.name, (), node.lineno))

    def visit_ImportFrom(self, node: ast.ImportFrom) -> None:
        self.model.imports.append(ImportInfo(
            node.module or "", tuple(a.name for a in node.names), node.lineno, node.level))

    def visit_Call(self, node: ast.Call) -> None:
        callee, name, is_attr = _call_name(node)
        self.model.calls.append(CallInfo(callee, name, node.lineno, is_attr))
        self.generic_visit(node)


def parse_file(path: str, text: str) -> FileModel:
    """Parse one file. Raises SourceSyntaxError on invalid source."""
    try:
        tree = ast.parse(text, filename=path)
    except SyntaxError as exc:
        raise SourceSyntaxError(path, exc.lineno, exc.msg) from exc
    model = FileModel(path=path, module=module_name(path))
    _Collector(model).visit(tree)
    model.calls.sort(key=lambda c: c.line)
    return model


def parse_sources(files: Mapping[str, str]) -> SourceModel:
    model = SourceModel()
    for path in sorted(files):
        try:
            model.files[path] = parse_file(path, files[path])
        except SourceSyntaxError as exc:
            model.errors.append(exc)
    return model


def parse_tree(root: str | Path) -> SourceModel:
    root = Path(root)
    return parse_sources({p: (root / p).read_text("utf-8") for p in subject_files(root)})


# targets


@dataclass(frozen=True)
class ExpectedMethod:
    qualified_name: str
    must_be_async: bool


@dataclass(frozen=True)
class TargetsManifest:
    expected_columns: tuple[tuple[str, str], ...]
    expected_methods: tuple[ExpectedMethod, ...]
    expected_tests: tuple[str, ...]

    def __post_init__(self) -> None:
        for label, items in (("column", self.expected_columns),
                             ("method", [m.qualified_name for m in self.expected_methods]),
                             ("test", self.expected_tests)):
            seen = set()
            for item in items:
                if item in seen:
                    raise ConfigError(f"duplicate {label} in targets manifest: {item}")
                seen.add(item)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "TargetsManifest":
        try:
            columns = tuple((str(c["class_name"]), str(c["attribute_name"]))
                            for c in data.get("expected_columns") or ())
            methods = tuple(ExpectedMethod(str(m["qualified_name"]), bool(m.get("must_be_async", False)))
                            for m in data.get("expected_methods") or ())
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed targets manifest: {exc}") from exc
        tests = tuple(str(t) for t in data.get("expected_tests") or ())
        return cls(columns, methods, tests)

    @classmethod
    def load(cls, path: str | Path) -> "TargetsManifest":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text("utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot load targets manifest {path}: {exc}") from exc
        return cls.from_mapping(data)

    def to_dict(self) -> dict[str, Any]:
        return {
            "expected_columns": [{"class_name": c, "attribute_name": a} for c, a in self.expected_columns],
            "expected_methods": [asdict(m) for m in self.expected_methods],
            "expected_tests": list(self.expected_tests),
        }


# statuses


@dataclass(frozen=True)
class Ratio:
    migrated: int
    total: int

    def __str__(self) -> str:
        return f"{self.migrated}/{self.total}"

    @classmethod
    def parse(cls, text: str) -> "Ratio":
        a, _, b = text.partition("/")
        return cls(int(a), int(b))

    @classmethod
    def of(cls, statuses: Iterable[Any]) -> "Ratio":
        statuses = list(statuses)
        return cls(sum(1 for s in statuses if s.migrated), len(statuses))


@dataclass(frozen=True)
class ColumnStatus:
    class_name: str
    attribute_name: str
    uses_mapped_column_call: bool
    has_mapped_annotation: bool
    found: bool = True

    @property
    def migrated(self) -> bool:
        return self.uses_mapped_column_call and self.has_mapped_annotation


@dataclass(frozen=True)
class MethodStatus:
    qualified_name: str
    fully_typed: bool
    async_ok: bool
    found: bool = True

    @property
    def migrated(self) -> bool:
        return self.fully_typed and self.async_ok


@dataclass(frozen=True)
class TestStatus:
    __test__ = False

    qualified_name: str
    is_async: bool
    awaits_present: bool
    found: bool = True

    @property
    def migrated(self) -> bool:
        return self.is_async and self.awaits_present


class FindingKind(str, Enum):
    QUERY_CALL = "query_call"
    SESSIONMAKER_USE = "sessionmaker_use"
    SCHEMA_COLUMN = "schema_column"
    SYNC_ENGINE = "sync_engine"
    WRONG_IMPORT = "wrong_import"


@dataclass(frozen=True)
class LegacyFinding:
    kind: FindingKind
    path: str
    line: int
    detail: str = ""


def _lookup(candidates: Iterable[tuple[str, Any]], name: str) -> Optional[Any]:
    """Exact qualified match first, then a unique dotted-suffix match."""
    candidates = list(candidates)
    for qual, item in candidates:
        if qual == name:
            return item
    suffix = [item for qual, item in candidates if qual.endswith("." + name)]
    return suffix[0] if len(suffix) == 1 else None


def _functions(model: SourceModel) -> list[tuple[str, FunctionInfo]]:
    return [(f"{fm.module}.{fn.qualname}" if fm.module else fn.qualname, fn)
            for fm in model.iter_files() for fn in fm.functions]


def analyze_columns(model: SourceModel, manifest: TargetsManifest) -> list[ColumnStatus]:
    classes = [(f"{fm.module}.{c.qualname}" if fm.module else c.qualname, c)
               for fm in model.iter_files() for c in fm.classes]
    statuses = []
    for class_name, attr_name in manifest.expected_columns:
        cls = _lookup(classes, class_name)
        attr = None
        if cls is not None:
            attr = next((a for a in reversed(cls.attributes) if a.name == attr_name), None)
        if attr is None:
            statuses.append(ColumnStatus(class_name, attr_name, False, False, found=False))
            continue
        statuses.append(ColumnStatus(
            class_name, attr_name,
            uses_mapped_column_call=attr.value_call == "mapped_column",
            has_mapped_annotation=attr.annotation_head == "Mapped",
        ))
    return statuses


def analyze_methods(model: SourceModel, manifest: TargetsManifest) -> list[MethodStatus]:
    functions = _functions(model)
    statuses = []
    for expected in manifest.expected_methods:
        fn = _lookup(functions, expected.qualified_name)
        if fn is None:
            statuses.append(MethodStatus(expected.qualified_name, False, False, found=False))
            continue
        statuses.append(MethodStatus(
            expected.qualified_name,
            fully_typed=fn.fully_typed,
            async_ok=fn.is_async == expected.must_be_async,
        ))
    return statuses


def analyze_tests(model: SourceModel, manifest: TargetsManifest) -> list[TestStatus]:
    functions = _functions(model)
    statuses = []
    for name in manifest.expected_tests:
        fn = _lookup(functions, name)
        if fn is None:
            statuses.append(TestStatus(name, False, False, found=False))
            continue
        statuses.append(TestStatus(name, is_async=fn.is_async, awaits_present=fn.await_count > 0))
    return statuses


def find_legacy_patterns(model: SourceModel) -> list[LegacyFinding]:
    findings = []
    for fm in model.iter_files():
        for call in fm.calls:
            if call.is_attribute and call.name == "query":
                findings.append(LegacyFinding(FindingKind.QUERY_CALL, fm.path, call.line, call.callee))
            elif call.name == "sessionmaker":
                findings.append(LegacyFinding(FindingKind.SESSIONMAKER_USE, fm.path, call.line, call.callee))
            elif call.name == "create_engine":
                findings.append(LegacyFinding(FindingKind.SYNC_ENGINE, fm.path, call.line, call.callee))
        for call in fm.column_calls:
            findings.append(LegacyFinding(FindingKind.SCHEMA_COLUMN, fm.path, call.line, call.callee))
        for imp in fm.imports:
            if imp.level or imp.module == ASYNC_EXTENSION_MODULE or imp.module.startswith(ASYNC_EXTENSION_MODULE + "."):
                continue
            for name in imp.names:
                if name in ASYNC_EXTENSION_NAMES:
                    findings.append(LegacyFinding(FindingKind.WRONG_IMPORT, fm.path, imp.line,
                                                  f"{name} imported from {imp.module}"))
    findings.sort(key=lambda f: (f.path, f.line, f.kind.value, f.detail))
    return findings


# report


@dataclass
class AnalysisReport:
    columns: list[ColumnStatus]
    methods: list[MethodStatus]
    tests: list[TestStatus]
    findings: list[LegacyFinding]
    parse_errors: list[SourceSyntaxError]

    @property
    def migrated_columns(self) -> Ratio:
        return Ratio.of(self.columns)

    @property
    def migrated_methods(self) -> Ratio:
        return Ratio.of(self.methods)

    @property
    def migrated_tests(self) -> Ratio:
        return Ratio.of(self.tests)

    @property
    def discrepancies(self) -> list[str]:
        out = [f"column {s.class_name}.{s.attribute_name} not found" for s in self.columns if not s.found]
        out += [f"method {s.qualified_name} not found" for s in self.methods if not s.found]
        out += [f"test {s.qualified_name} not found" for s in self.tests if not s.found]
        return out

    def to_dict(self) -> dict[str, Any]:
        def status(s: Any) -> dict[str, Any]:
            return {**asdict(s), "migrated": s.migrated}

        return {
            "summary": {
                "migrated_columns": str(self.migrated_columns),
                "migrated_methods": str(self.migrated_methods),
                "migrated_tests": str(self.migrated_tests),
            },
            "columns": [status(s) for s in self.columns],
            "methods": [status(s) for s in self.methods],
            "tests": [status(s) for s in self.tests],
            "findings": [{"kind": f.kind.value, "path": f.path, "line": f.line, "detail": f.detail}
                         for f in self.findings],
            "discrepancies": self.discrepancies,
            "parse_errors": [{"path": e.path, "line": e.line, "message": e.message} for e in self.parse_errors],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def analyze(model: SourceModel, manifest: TargetsManifest) -> AnalysisReport:
    return AnalysisReport(
        columns=analyze_columns(model, manifest),
        methods=analyze_methods(model, manifest),
        tests=analyze_tests(model, manifest),
        findings=find_legacy_patterns(model),
        parse_errors=list(model.errors),
    )


def analyze_tree(root: str | Path, manifest: TargetsManifest) -> AnalysisReport:
    return analyze(parse_tree(root), manifest)
