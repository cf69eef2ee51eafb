import sys

import numpy as np
import pytest

from firmcluster import ModelParams, make_rastrigin_landscape


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def landscape():
    return make_rastrigin_landscape(10, 42)


@pytest.fixture
def params():
    return ModelParams()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
