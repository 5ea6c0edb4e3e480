"""Collects the acceptance verdicts and prints them at the end of the run."""

import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one ``PASS``/``FAIL`` line and return whether it passed."""

    def record(number, label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {label} ({detail})"
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
