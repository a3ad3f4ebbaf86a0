import sys

import pytest

from gausscantor.sets import load_set
from gausscantor.subshift import reduced_markov


@pytest.fixture(scope="session")
def b1_markov():
    return reduced_markov(load_set("B1"))


@pytest.fixture(scope="session")
def e2_markov():
    return reduced_markov(load_set("E2"))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
