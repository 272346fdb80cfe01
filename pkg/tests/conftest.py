import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from fraisse_workbench import generic  # noqa: E402
from fraisse_workbench.structure import L  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CHAIN_ARGS = dict(stage_budget=12, size_budget=3, seed=0)

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def chain():
    """The stage_budget 12, size_budget 3, seed 0 chain shared by several suites."""
    return generic.build_chain(L, CHAIN_ARGS["stage_budget"], CHAIN_ARGS["size_budget"], seed=CHAIN_ARGS["seed"])


@pytest.fixture(scope="session")
def small_chain():
    return generic.build_chain(L, 4, 2, seed=0)


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    if "FAIL" not in ACCEPTANCE.get(criterion, ""):
        ACCEPTANCE[criterion] = line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[c])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion implemented by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n = mark.args[0]
    if rep.failed and "FAIL" not in ACCEPTANCE.get(n, ""):
        ACCEPTANCE[n] = f"criterion {n}: FAIL ({item.name} raised or asserted)"
