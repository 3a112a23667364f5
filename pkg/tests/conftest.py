import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # make oracles importable

from proca_workbench.lattice import Grid


@pytest.fixture(scope="session")
def small_grid():
    """Cheap grid for solver sanity checks (residuals at the 1e-6 level)."""
    return Grid(L=10.0, N=12, T=8.0, Nt=240)


@pytest.fixture(scope="session")
def fine_grid():
    """Acceptance-scale grid: band-limited sources solve to ~1e-8 here."""
    return Grid(L=10.0, N=16, T=8.0, Nt=400)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260815)
