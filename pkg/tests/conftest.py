"""Shared pytest wiring: surface acceptance PASS/FAIL lines in the summary.

The acceptance tests record one line per criterion; printing them from a
terminal-summary hook keeps them visible under pytest's default output
capture, whatever flags the run uses.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
