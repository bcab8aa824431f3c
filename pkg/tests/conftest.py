import sys

import pytest

from streambandit.distributions import DistributionSpec


@pytest.fixture
def uniform():
    return DistributionSpec.uniform()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULT_LINES:
            terminalreporter.write_line(line)
