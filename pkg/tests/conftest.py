import pytest

from sdgcd import Discretization, build_structured, make_problem

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mesh2():
    return build_structured(2)


@pytest.fixture(scope="session")
def mesh4():
    return build_structured(4)


@pytest.fixture(scope="session")
def exp2_disc4():
    return Discretization(4, make_problem(2, 1.0).b)


@pytest.fixture(scope="session")
def exp3_disc8():
    return Discretization(8, make_problem(3, 1.0).b)
