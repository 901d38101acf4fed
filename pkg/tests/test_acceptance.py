"""Acceptance criteria 1-7, one test each, each logging a PASS/FAIL line."""

import dataclasses
import json
import random
import subprocess
import sys
import time

import pytest

from libmigrate.analyzer import parse_sources, analyze
from libmigrate.config import load_config
from libmigrate.gateway import extract_code
from libmigrate.orchestrator import run_experiment
from libmigrate.prompts import Strategy, render, template_from_mapping
from libmigrate.toolchain import ToolCommands, parse_lint_score, parse_typecheck_errors
from libmigrate.workspace import Phase, tree_digest
from tests.acceptance_log import LINES as ACCEPTANCE_LINES
from tests.conftest import FIXTURES, TODO
from tests.synthetic import build_corpus, oracle

ROOT = TODO.parent.parent.parent


def verdict(number: int, title: str, checks: dict[str, bool], detail: str = "") -> None:
    ok = all(checks.values())
    failed = ", ".join(name for name, passed in checks.items() if not passed)
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    if failed:
        line += f" [failed: {failed}]"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def test_criterion_1_application_fixture_classification(tmp_path):
    config = load_config(TODO / "experiment.yaml")
    config = dataclasses.replace(config, phases=(Phase.APPLICATION,), tools=ToolCommands(), jobs=1)
    started = time.perf_counter()
    report = run_experiment(config, tmp_path)
    elapsed = time.perf_counter() - started

    def cell(strategy):
        row = report.cell(strategy, "application")
        kinds = {f["kind"] for f in row.findings}
        return str(row.metrics.migrated_columns), str(row.metrics.migrated_methods), "wrong_import" in kinds

    zero, one, cot = cell("zero-shot"), cell("one-shot"), cell("chain-of-thought")
    verdict(1, "application fixture classification", {
        "zero-shot columns 0/4": zero[0] == "0/4",
        "zero-shot wrong_import": zero[2],
        "one-shot columns 4/4": one[0] == "4/4",
        "chain-of-thought columns 4/4": cot[0] == "4/4",
        "chain-of-thought wrong_import": cot[2],
        "methods 16/18, 13/18, 17/18": (zero[1], one[1], cot[1]) == ("16/18", "13/18", "17/18"),
        "all files applied": report.completed,
        "runtime < 5 s": elapsed < 5.0,
    }, "; ".join(f"{name}: columns {c}, methods {m}, wrong_import {'yes' if w else 'no'}"
                 for name, (c, m, w) in (("zero-shot", zero), ("one-shot", one), ("chain-of-thought", cot)))
       + f"; {elapsed:.2f}s")


def test_criterion_2_tests_phase_fidelity(tmp_path):
    config = load_config(TODO / "experiment.yaml")
    config = dataclasses.replace(config, phases=(Phase.TESTS,), fixes={})
    report = run_experiment(config, tmp_path)
    rows = {s.value: report.cell(s.value, "tests") for s in Strategy}
    migrated = {k: str(r.metrics.migrated_tests) for k, r in rows.items()}
    passing = {k: f"{r.metrics.tests_passed}/{r.metrics.tests_total}" for k, r in rows.items()}
    verdict(2, "tests-phase fidelity", {
        "migrated_tests 4/4 everywhere": set(migrated.values()) == {"4/4"},
        "tests_passed 1/4 everywhere": set(passing.values()) == {"1/4"},
    }, f"migrated {migrated}, passing {passing}")


def test_criterion_3_parser_oracle_equivalence():
    files, targets = build_corpus()
    result = analyze(parse_sources(files), targets)
    got = {
        "columns": {f"{s.class_name}.{s.attribute_name}": s.migrated for s in result.columns},
        "methods": {s.qualified_name: s.migrated for s in result.methods},
        "tests": {s.qualified_name: s.migrated for s in result.tests},
    }
    expected = oracle(files, targets)
    total = sum(len(v) for v in expected.values())
    agree = sum(got[k][n] == expected[k][n] for k in expected for n in expected[k])
    verdict(3, "analyzer vs brute-force oracle", {
        "20 files": len(files) == 20,
        "100% agreement": agree == total,
    }, f"{agree}/{total} targets agree")


def test_criterion_4_output_parser_exactness():
    golden = FIXTURES / "tool_outputs"
    labels = json.loads((golden / "labels.json").read_text())
    lint = {n: (golden / "pylint" / f"{n}.txt").read_text() for n in labels["pylint"]}
    types = {(t, n): (golden / t / f"{n}.txt").read_text() for t in ("pyright", "mypy") for n in labels[t]}
    lint_ok = sum(parse_lint_score(text) == labels["pylint"][n] for n, text in lint.items())
    types_ok = sum(parse_typecheck_errors(text) == labels[t][n] for (t, n), text in types.items())
    corpus = "\n".join([*lint.values(), *types.values()])
    verdict(4, "lint and type-check parsers vs hand labels", {
        ">= 10 lint captures": len(lint) >= 10,
        ">= 10 type-check captures": len(types) >= 10,
        "lint exact": lint_ok == len(lint),
        "type-check exact": types_ok == len(types),
        "forms present": all(form in corpus for form in ("7.68/10", "7.97/10", "0 errors", "6 errors")),
    }, f"lint {lint_ok}/{len(lint)}, type-check {types_ok}/{len(types)}")


CODE_LINES = [
    "import asyncio", "", "    return await session.execute(stmt)", "\tx = 1  # tab indent",
    "```python", "```", "print('### START CODE ### inline mention')", "s = '''### END CODE ###'''",
    "# ### START CODE", "def f() -> None:", "    pass", "héllo = 'ünïcode ✓'", "   ", "x = {'a': [1, 2]}",
    "class Model(Base):", "    id: Mapped[int] = mapped_column(primary_key=True)", "trailing = 1   ",
]
PROSE = [
    "", "Sure! Here is the migrated code:", "```python", "```", "Note: markers ### START CODE ### inline.",
    "I changed Column to mapped_column.", "Let me know if anything fails.", "Explanation:\n- one\n- two",
]


def _random_pair(rng: random.Random) -> tuple[str, str]:
    lines = [rng.choice(CODE_LINES) for _ in range(rng.randint(1, 12))]
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        lines = ["pass"]
    prose = "\n".join(rng.choice(PROSE) for _ in range(rng.randint(0, 4)))
    return prose, "\n".join(lines)


def test_criterion_5_round_trip_extraction():
    rng = random.Random(20240402)
    template = template_from_mapping({})
    failures = 0
    for i in range(1000):
        prose, code = _random_pair(rng)
        block = render(list(Strategy)[i % 3], template, code).subject_block
        raw = f"{prose}\n{block}\n{rng.choice(PROSE)}" if i % 2 else f"{block}\n{prose}"
        try:
            failures += extract_code(raw).code != code
        except Exception:
            failures += 1
    verdict(5, "extract(render-embedded code) == code", {"zero failures": failures == 0},
            f"{1000 - failures}/1000 pairs")


def _cli_run(out):
    started = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "libmigrate.cli", "run", "--config", str(TODO / "experiment.yaml"),
                           "--mode", "replay", "--out", str(out)], capture_output=True, text=True)
    return proc, time.perf_counter() - started


def test_criterion_6_replay_determinism(tmp_path):
    first, t1 = _cli_run(tmp_path / "a")
    second, t2 = _cli_run(tmp_path / "b")
    a, b = (tmp_path / "a" / "report.json").read_bytes(), (tmp_path / "b" / "report.json").read_bytes()
    cells = sorted(p.name for p in (tmp_path / "a" / "workspaces").iterdir())
    digests_equal = cells == sorted(p.name for p in (tmp_path / "b" / "workspaces").iterdir()) and all(
        tree_digest(tmp_path / "a" / "workspaces" / c) == tree_digest(tmp_path / "b" / "workspaces" / c)
        for c in cells)
    verdict(6, "replay determinism", {
        "both runs exit 0": first.returncode == second.returncode == 0,
        "byte-identical report.json": a == b,
        "identical workspace digests": digests_equal,
        "runtime < 60 s": max(t1, t2) < 60.0,
    }, f"{len(cells)} workspaces, runs took {t1:.1f}s and {t2:.1f}s")


def test_criterion_7_live_walkthrough_is_documented():
    readme = (ROOT / "README.md").read_text()
    checks = {
        "walkthrough section": "## Live walkthrough" in readme,
        "record command shown": "--mode record" in readme,
        "replay re-run shown": "--mode replay" in readme,
    }
    ok = all(checks.values())
    line = (f"criterion 7 {'MANUAL' if ok else 'FAIL'}: live end-to-end run is a documented manual "
            "procedure (README, Live walkthrough), not executed in CI")
    ACCEPTANCE_LINES[7] = line
    print(line)
    assert ok, checks
