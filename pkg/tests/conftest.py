import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wgossip.fixtures import gen_fixture  # noqa: E402

F1_WEIGHT = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))


@pytest.fixture(scope="session")
def f1():
    return gen_fixture("F1", weight=F1_WEIGHT)


@pytest.fixture(scope="session")
def f2():
    return gen_fixture("F2", seed=3)


@pytest.fixture(scope="session")
def f3():
    return gen_fixture("F3", seed=5)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
