import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from floatsheet.model import LimitConstants
from floatsheet.solver import solve_limit_problem

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

STANDARD_ANCHOR = (0.0, 0.5)
LIFTED_ANCHOR = (0.0, 0.9)


@pytest.fixture(scope="session")
def lim():
    return LimitConstants(A_LG_star=1.0, A_SG_star=0.3, A_SL_star=0.3, C_star=1.0)


@pytest.fixture(scope="session")
def standard_solution(lim):
    return solve_limit_problem(lim, STANDARD_ANCHOR)


@pytest.fixture(scope="session")
def lifted_solution(lim):
    return solve_limit_problem(lim, LIFTED_ANCHOR)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose the call-phase outcome to fixtures (the acceptance verdict lines use it)
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
