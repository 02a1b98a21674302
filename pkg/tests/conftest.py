import re

import pytest

# (criterion, status, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES: list = []


@pytest.fixture
def report():
    def add(criterion: str, ok: bool, detail: str, soft: bool = False):
        status = ("PASS" if ok else "FAIL") + (" (soft)" if soft else "")
        ACCEPTANCE_LINES.append((criterion, status, detail))
    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")

    def order(line):
        head = re.match(r"\d+", line[0])
        return int(head.group()), line[0]

    for criterion, status, detail in sorted(ACCEPTANCE_LINES, key=order):
        terminalreporter.write_line(f"[{status}] {criterion}: {detail}")
