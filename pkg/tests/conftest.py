from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from bratteli_metric.families import pascal
from bratteli_metric.graph import cotransitions
from bratteli_metric.metric import iterate_metric

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def pascal12():
    g = pascal(2, 12)
    return g, iterate_metric(g, cotransitions(g))


@pytest.fixture(scope="session")
def pascal200():
    g = pascal(2, 200)
    return g, iterate_metric(g, cotransitions(g), mode="float")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num][1])
