"""Shared pytest hooks.

The acceptance tests register one summary line per criterion; printing them
from the terminal-summary hook keeps them visible regardless of output
capture, for passing and failing criteria alike.
"""

_criterion_lines: list = []


def register_criterion_line(line: str) -> None:
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)
