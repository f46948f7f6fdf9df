import logging

import pytest

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _quiet_range_warnings():
    logging.getLogger("entrokit.harness").setLevel(logging.ERROR)
    yield
    logging.getLogger("entrokit.harness").setLevel(logging.NOTSET)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
