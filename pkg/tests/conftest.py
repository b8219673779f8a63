import json
from pathlib import Path

import pytest

from catbell.optimize import load_result

ROOT = Path(__file__).resolve().parents[1]
REFERENCE_RESULT = ROOT / "results" / "reference_violation.json"

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args
    failed = report.failed or (report.when == "call" and report.skipped)
    prev = _criteria.get(number, (text, "PASS"))
    status = "FAIL" if failed or prev[1] == "FAIL" else "PASS"
    _criteria[number] = (text, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        text, status = _criteria[number]
        terminalreporter.write_line(f"{status} criterion {number}: {text}")


@pytest.fixture(scope="session")
def reference():
    """(settings, state, best_value) of the stored reference violation."""
    return load_result(REFERENCE_RESULT.read_text())


@pytest.fixture(scope="session")
def reference_json():
    return json.loads(REFERENCE_RESULT.read_text())
