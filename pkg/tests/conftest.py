import pytest
from hypothesis import HealthCheck, settings

from lambdatheory.hyperreal import Field
from lambdatheory.oracle import UltrafilterOracle

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def oracle():
    return UltrafilterOracle()


@pytest.fixture
def K(oracle):
    return Field(oracle)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
