import os
import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(k, passed, detail)``."""

    def add(criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        return bool(passed)

    return add


def _order(row):
    num, rest = re.match(r"(\d+)(.*)", str(row[0])).groups()
    return int(num), rest


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=_order):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {criterion}: {mark}  {detail}")
