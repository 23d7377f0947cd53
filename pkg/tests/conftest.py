import os
from collections import OrderedDict

import pytest
from hypothesis import HealthCheck, settings

from ordvar.estimators import TwoSampleSummary

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> [title, checks passed, checks failed, failure labels]
CRITERIA = OrderedDict()


def record(number: int, title: str, ok: bool, label: str = "") -> None:
    entry = CRITERIA.setdefault(number, [title, 0, 0, []])
    if ok:
        entry[1] += 1
    else:
        entry[2] += 1
        entry[3].append(label)


@pytest.fixture
def criterion():
    return record


@pytest.fixture(scope="session")
def rain_summary():
    """Two-sample summary of the rainfall data as stated alongside the tables."""
    return TwoSampleSummary(16, 16, 1016.2937, 818.0654, 1038675.0494, 438664.9655)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, good, bad, labels = CRITERIA[number]
        status = "PASS" if bad == 0 else "FAIL"
        line = f"criterion {number:>2} [{status}] {title}: {good}/{good + bad} checks passed"
        if labels:
            line += "; failing: " + ", ".join(labels[:6])
            if len(labels) > 6:
                line += f", ... ({len(labels) - 6} more)"
        tr.write_line(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
