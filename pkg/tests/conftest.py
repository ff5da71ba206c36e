import math

import numpy as np
import pytest
from hypothesis import settings

from rpdist.ensemble import EnsembleParams

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

EPS_STD = 1.0 / math.sqrt(2.0)


@pytest.fixture
def std_params():
    return EnsembleParams(n=1024, gamma_exp=1.5, epsilon=EPS_STD, master_seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
