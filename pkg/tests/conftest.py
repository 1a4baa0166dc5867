import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when in ("setup", "call"):
        name = report.nodeid.split("::")[-1]
        if report.failed or report.when == "call":
            _acceptance_outcomes.setdefault(name, "PASS" if report.passed else "FAIL")
        if report.failed:
            _acceptance_outcomes[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num, (test_name, title) in sorted(mod.CRITERIA.items()):
        status = _acceptance_outcomes.get(test_name, "NOT RUN")
        detail = mod.DETAILS.get(num, "")
        terminalreporter.write_line(f"criterion {num}: {status:<7} {title}  {detail}".rstrip())


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(12345)
