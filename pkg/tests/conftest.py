import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

DATA = HERE / "data"

# (criterion, PASS/FAIL, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
