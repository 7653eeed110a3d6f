"""Shared pytest wiring: the acceptance summary block.

Each acceptance test records one line before asserting, so the terminal
summary always shows a pass/fail verdict per criterion, including for runs
where an assertion tripped.
"""

import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    def record(num: int, ok: bool, detail: str = "") -> None:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        ACCEPTANCE_LINES[num] = f"criterion {num:02d}: {status}{suffix}"
        assert ok, f"criterion {num} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
