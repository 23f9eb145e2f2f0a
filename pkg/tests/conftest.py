import sys

# one "criterion N: PASS|FAIL ..." line per acceptance criterion, filled by test_acceptance
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("conftest"), "ACCEPTANCE_LINES", ACCEPTANCE_LINES)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
