import pytest

from databricks.labs.rcn.grid import BoundaryConfig, build_grid
from databricks.labs.rcn.optimize import init_field, perturb_field


@pytest.fixture
def knee_field(small_grid):
    return init_field(small_grid, BoundaryConfig(k=0), "knee")


@pytest.fixture
def rough_field(small_grid, half_dirichlet):
    """Roll pattern with Dirichlet nodes on the left half and seeded noise."""
    return perturb_field(init_field(small_grid, half_dirichlet, "roll"), 0.05, seed=7)


@pytest.fixture
def tiny_grid():
    return build_grid(0.8, 6.0, 8, 8)
