import pytest

from losdivert.config import FacilityConfig, parse_config


@pytest.fixture(scope="session")
def table1():
    return parse_config("table1.cfg")


@pytest.fixture(scope="session")
def table3():
    return parse_config("table3.cfg")


@pytest.fixture(scope="session")
def single(table1):
    """One uncongested facility (interarrival 9)."""
    f = table1.facilities[0]
    fac = FacilityConfig("solo", 9.0, f.service, f.p_ncd, f.p_lab)
    return table1.replace(facilities=(fac,), travel=((10.0,),), policies=("none",),
                          replications=1, horizon_days=5, warmup_days=0)


@pytest.fixture
def small(table1):
    """Two facilities, short horizon."""
    return table1.replace(replications=2, horizon_days=4, warmup_days=1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
