import sys

import pytest

from helpers import constant_problem, example_problem


def pytest_configure(config):
    config.addinivalue_line("markers", "property: randomized property suites (run with -m property)")
    config.addinivalue_line("markers", "acceptance: acceptance criteria")


@pytest.fixture(scope="session")
def example():
    return example_problem()


@pytest.fixture(scope="session")
def const_problem():
    return constant_problem()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        test_acceptance = module
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.summary_lines():
            terminalreporter.write_line(line)
