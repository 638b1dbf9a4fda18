import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from targetlump import TargetProblem  # noqa: E402


@pytest.fixture
def four_state():
    """T = {3}; state 0 never reaches T in one step, states 1 and 2 split evenly."""
    P = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.25, 0.0, 0.25, 0.5],
        [0.5, 0.0, 0.0, 0.5],
        [0.0, 0.0, 0.0, 1.0],
    ])
    return TargetProblem(P, [3], 0.5)


@pytest.fixture
def identical_rows():
    P = np.array([
        [0.2, 0.3, 0.1, 0.4],
        [0.2, 0.3, 0.1, 0.4],
        [0.2, 0.3, 0.1, 0.4],
        [0.0, 0.0, 0.0, 1.0],
    ])
    return TargetProblem(P, [3], 0.5)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
