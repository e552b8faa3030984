import pytest

from chpuc.instance import bundled_instance
from chpuc.scenario import standard_cases, run_suite

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def mini24():
    return bundled_instance("mini24")


@pytest.fixture(scope="session")
def mini24_suite(mini24):
    """The seven-case suite on the bundled instance, solved once per session."""
    return run_suite(mini24, standard_cases())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
