import pytest

from oracles import toy_design, toy_problem, toy_state


@pytest.fixture
def problem():
    return toy_problem()


@pytest.fixture
def state():
    return toy_state()


@pytest.fixture
def design():
    return toy_design()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
