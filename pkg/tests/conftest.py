import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("quick", deadline=None, max_examples=10,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    config.addinivalue_line("markers", "bench: synthetic-system timing run (tens of minutes)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("MSTSIM_SKIP_BENCH") != "1":
        return
    skip = pytest.mark.skip(reason="MSTSIM_SKIP_BENCH=1")
    for item in items:
        if "bench" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    import sys

    REPORT = getattr(sys.modules.get("test_acceptance"), "REPORT", None)
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
