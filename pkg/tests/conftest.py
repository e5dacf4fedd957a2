"""Shared fixtures and the acceptance summary printed at the end of a run."""
import pytest

from spinlogic.experiments import Hardware

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def hw():
    return Hardware()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {line}")
