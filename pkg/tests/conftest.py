import pytest
from hypothesis import HealthCheck, settings

from default_delegation.domain import Quadratic, Uniform01, WelfareParams

settings.register_profile("repo", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def prefs():
    return Quadratic(revenue=1.0)


@pytest.fixture
def uniform():
    return Uniform01()


@pytest.fixture
def equity():
    return WelfareParams(beta=1.0, gamma=0.0)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a named acceptance result; the verdict is printed in the summary."""

    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
