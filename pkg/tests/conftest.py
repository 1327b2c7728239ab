import numpy as np
import pytest

from bubbletower.constants import build_constant_table
from bubbletower.corrector import EllipticProblem, interaction_rhs, solve_corrector
from bubbletower.grids import patched_log_grid


@pytest.fixture(scope="session")
def table72():
    """n=7, k=2 table with default parameters."""
    return build_constant_table(7, 2)


@pytest.fixture(scope="session")
def table73():
    return build_constant_table(7, 3)


@pytest.fixture(scope="session")
def phibar7(table72):
    """Corrector solution for n=7 on the standard solver grid."""
    dim = table72.dim
    grid = patched_log_grid(1e-2, 4e3, 3600)
    prob = EllipticProblem(dim, interaction_rhs(dim, table72.cstar), grid)
    return solve_corrector(prob)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
