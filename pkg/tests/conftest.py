import os

import pytest

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(autouse=True)
def _serial_workers(monkeypatch):
    # tests that compare worker counts set this themselves
    monkeypatch.setenv("SCATTER_THREADS", os.environ.get("SCATTER_TEST_THREADS", "1"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
