import numpy as np
import pytest

from bnf.counterexample import example_dataset


@pytest.fixture
def ex1():
    return example_dataset()


def expanded_bn_cost(w1, w2):
    """BN cost of the three-sample example written out term by term (gamma=1, beta=0)."""
    q = np.sqrt(2 * w1**2 + 6 * w1 * w2 + 6 * w2**2)
    return ((-w1 - 3 * w2) / q - 2) ** 2 + (-w1 / q - 5) ** 2 + ((2 * w1 + 3 * w2) / q - 13) ** 2


def expanded_standard_cost(w1, w2):
    return (w1 + w2 - 2) ** 2 + (w1 + 2 * w2 - 5) ** 2 + (2 * w1 + 3 * w2 - 13) ** 2


def centered_ls_direction(data):
    """Unit direction of the unique BN minimum ray for gamma > 0, beta arbitrary.

    With standardized outputs zhat, sum(zhat) = 0 and sum(zhat^2) = N, so the cost
    is constant - 2 gamma * sum(zhat_i y_i); that is maximized by w ~ S^-1 U^T y.
    """
    X, y = data.inputs, data.targets
    U = X - X.mean(axis=0)
    w = np.linalg.solve(U.T @ U, U.T @ y)
    return w / np.linalg.norm(w)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
