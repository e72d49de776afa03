import math

import numpy as np
import pytest

from qnmqubit import PhysicalConfig
from qnmqubit.hamiltonian import BranchHamiltonian
from qnmqubit.physparams import HBAR


@pytest.fixture
def cfg():
    return PhysicalConfig()


def small_branch(rng=None, n_bath=2, forced=False, omega=2 * math.pi * 1e9):
    """A GHz-scale branch with couplings of tens of MHz, for brute-force checks."""
    rng = np.random.default_rng(0) if rng is None else rng
    spread = 2 * math.pi * 30e6
    wj = omega + np.sort(rng.uniform(-spread, spread, n_bath))
    g = HBAR * 2 * math.pi * 50e6 * rng.uniform(0.3, 1.0, n_bath) * rng.choice([-1, 1], n_bath)
    xi = HBAR * 2 * math.pi * 20e6 * rng.uniform(-1, 1) if forced else 0.0
    xij = HBAR * 2 * math.pi * 20e6 * rng.uniform(-1, 1, n_bath) if forced else np.zeros(n_bath)
    return BranchHamiltonian(0, omega, g, xi, xij, 0.0, wj)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
