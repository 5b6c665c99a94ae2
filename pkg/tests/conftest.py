import pytest

# one line per acceptance criterion, filled in by test_acceptance.py
CRITERIA_LINES = {}


def record(number, passed, detail):
    CRITERIA_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(CRITERIA_LINES[number])


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(CRITERIA_LINES):
            terminalreporter.write_line(CRITERIA_LINES[number])
