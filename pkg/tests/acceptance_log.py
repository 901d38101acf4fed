"""PASS/FAIL lines recorded by the acceptance tests, printed at session end."""

LINES: dict[int, str] = {}
