"""Shared test plumbing.

The acceptance suite records one PASS/FAIL line per criterion; the terminal
summary hook prints them at the end of the run so they are visible without
``-s``.
"""

from __future__ import annotations

from contextlib import contextmanager

import pytest

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture
def criterion():
    """Context manager tagging a block of assertions as one acceptance
    criterion; emits its PASS/FAIL line either way."""

    @contextmanager
    def _criterion(number: int, name: str):
        try:
            yield
        except BaseException:
            record_acceptance(f"criterion {number} ({name}): FAIL")
            raise
        record_acceptance(f"criterion {number} ({name}): PASS")

    return _criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
