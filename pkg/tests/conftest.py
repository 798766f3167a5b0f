import sys

import pytest

from descentlab.descent_chain import exact_joint_pmf


@pytest.fixture(scope="session")
def pmf_cache():
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = exact_joint_pmf(n)
        return cache[n]

    return get


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
