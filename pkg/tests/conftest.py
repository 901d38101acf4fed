from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
TODO = FIXTURES / "todo_client"



@pytest.fixture
def todo_dir() -> Path:
    return TODO


def pytest_terminal_summary(terminalreporter):
    from tests.acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(LINES):
            terminalreporter.write_line(LINES[number])
