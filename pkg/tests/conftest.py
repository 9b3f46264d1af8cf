import numpy as np
import pytest
from hypothesis import settings

from hawkesbound import HawkesModel

# fixed example sequence so repeated runs exercise the same cases
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

TWO_TYPE_H = [[0.3, 0.2], [0.1, 0.4]]

_acceptance_lines = []


def record_acceptance(number, title, ok, detail=""):
    _acceptance_lines.append(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def two_type_exp():
    return HawkesModel.from_matrix(TWO_TYPE_H, [1.0, 1.0], "exponential", rate=1.0)


@pytest.fixture(scope="session")
def poisson2():
    return HawkesModel.from_matrix(np.zeros((2, 2)), [1.0, 1.0])
