"""Shared test configuration: acceptance summary lines.

The acceptance module appends one line per criterion to ACCEPTANCE_LINES
(pass or fail, with the tolerance it was judged at); they are printed in
a dedicated terminal section at the end of the run.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
