import math

import numpy as np
import pytest
from hypothesis import strategies as st

from symest.bloch import Qubit, make_sphere_grid

angles_theta = st.one_of(
    st.sampled_from([0.0, math.pi, math.pi / 2]),
    st.floats(min_value=0.0, max_value=math.pi, allow_nan=False),
)
angles_phi = st.floats(min_value=0.0, max_value=2 * math.pi, exclude_max=True, allow_nan=False)
qubits = st.builds(Qubit, angles_theta, angles_phi)


@pytest.fixture(scope="session")
def grid1024():
    return make_sphere_grid(1024)


@pytest.fixture(scope="session")
def grid256():
    return make_sphere_grid(256)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
