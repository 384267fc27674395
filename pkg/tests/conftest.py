import numpy as np
import pytest

from sbgd.objectives import Objective


def make_objective(f, grad, lo=-5.0, hi=5.0, d=1, **kw):
    """Wrap point-wise callables into an Objective over a box."""
    return Objective(kw.pop("name", "custom"), f, grad, np.full(d, lo), np.full(d, hi), **kw)


@pytest.fixture
def linear_objective():
    return make_objective(lambda x: 3.0 * x[..., 0] + 1.0,
                          lambda x: np.full_like(x, 3.0), name="linear")


@pytest.fixture
def constant_objective():
    return make_objective(lambda x: np.zeros(x.shape[:-1]) + 2.0,
                          lambda x: np.zeros_like(x), name="constant")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
