import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from phase_lab.evolution import HamiltonianSpec, TimeGrid
from phase_lab.state_space import bloch_state

settings.register_profile("phase_lab", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("phase_lab")

ORACLE = json.loads((Path(__file__).parent / "oracle" / "values.json").read_text())
S2 = 1 / math.sqrt(2)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([S2, S2], dtype=complex)
MINUS = np.array([S2, -S2], dtype=complex)
PLUS_I = np.array([S2, 1j * S2], dtype=complex)


def cpx(pair):
    return complex(pair[0], pair[1])


def cmat(rows):
    return np.array([[cpx(z) for z in row] for row in rows])


def sigma_z_half(omega=1.0):
    return HamiltonianSpec.static(0.5 * omega * np.diag([1.0, -1.0]))


def precession(theta, steps, omega=1.0, periods=1.0):
    """(H, psi0, grid) for spin-1/2 precession about z over ``periods`` periods."""
    grid = TimeGrid.uniform(0.0, periods * 2 * math.pi / omega, steps)
    return sigma_z_half(omega), bloch_state(theta), grid


@pytest.fixture
def oracle():
    return ORACLE


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS.values():
            terminalreporter.write_line(line)
