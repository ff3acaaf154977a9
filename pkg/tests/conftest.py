import numpy as np
import pytest

from warpcurv import PhaseState, build_metric, explicit_solution, integrate
from warpcurv.flow import Kind

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tanh3():
    return explicit_solution(Kind.TANH, 3, 1.0, 0.0)


@pytest.fixture(scope="session")
def generic4():
    """An integrated Ricci-generic solution in dimension four."""
    state = PhaseState([1.0, 2.0, 3.0], [0.5, -1.0, 0.25])
    return integrate(state, 0.0, (-0.2, 0.2))


@pytest.fixture(scope="session")
def generic4_chart(generic4):
    return build_metric(generic4)


@pytest.fixture(scope="session")
def diag12():
    """Integrated solution through y = diag(1, 2), p = 0."""
    return integrate(PhaseState([1.0, 2.0], [0.0, 0.0]), 0.0, (-0.2, 0.2))


@pytest.fixture
def acceptance(capsys):
    """Record one pass/fail line for an acceptance criterion and echo it to the terminal."""

    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
