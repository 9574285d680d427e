import pytest

from hhnet.network import PartialObservation, Role

from .helpers import sample


@pytest.fixture
def data30():
    return sample(0)


@pytest.fixture
def all_ones():
    return [PartialObservation.from_network(63, r) for r in Role for _ in range(3)]


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        passed, detail = module.RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
