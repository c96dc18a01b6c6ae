import pytest

from collar_forge.fixtures import (make_circle_in_disk, make_net_segment, make_square_boundary,
                                   make_strip_two_collar)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def circle():
    return make_circle_in_disk(1.0)


@pytest.fixture(scope="session")
def strip():
    return make_strip_two_collar(0.2)


@pytest.fixture(scope="session")
def square4():
    return make_square_boundary(1.0, 4)


@pytest.fixture(scope="session")
def square8():
    return make_square_boundary(1.0, 8)


@pytest.fixture(scope="session")
def net():
    return make_net_segment()


@pytest.fixture(scope="session")
def square_bicollar(square4):
    return square4.bicollar()
