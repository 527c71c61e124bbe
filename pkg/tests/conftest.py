from __future__ import annotations

# filled by tests/test_acceptance.py: criterion id -> (passed, summary line)
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.rstrip("ab")), k)):
        passed, line = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key:>3}  {line}")
