"""Shared pytest wiring for the suite."""

import sys


def pytest_terminal_summary(terminalreporter):
    """Print one line per acceptance criterion after the run.

    The acceptance tests record their verdicts as they execute; pytest
    captures stdout per test, so the summary lines go through the
    terminal reporter to stay visible in a plain run.
    """
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(results, key=lambda item: item[0]):
        terminalreporter.write_line(line)
