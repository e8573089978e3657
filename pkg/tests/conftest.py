import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

# one line per acceptance criterion, printed after the run
_CRITERIA: dict = {}


@pytest.fixture
def criterion(request):
    """Record ``(number, name, passed, detail)`` for the terminal summary."""

    def record(number, name, passed, detail=""):
        _CRITERIA[number] = (name, passed, detail)
        print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        name, passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"{number:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}")
