import logging

import pytest

from databricks.labs.rcn.grid import BoundaryConfig, build_grid
from databricks.labs.rcn.optimize import SweepParams, find_transition, init_field, minimize_field

logging.getLogger("tests").setLevel("DEBUG")
logging.getLogger("databricks.labs.rcn").setLevel("DEBUG")

logger = logging.getLogger(__name__)


@pytest.fixture(scope="session")
def transition_params():
    return SweepParams(m=96, n=96, tol=1e-5, max_iters=20000, num_threads=4)


@pytest.fixture(scope="session")
def desk_params():
    """Coarser settings for the scaling and certificate experiments."""
    return SweepParams(m=64, n=64, tol=1e-5, max_iters=20000, num_threads=4)


TRANSITION_EPS = (0.55, 0.50, 0.45, 0.40, 0.35, 0.30)


@pytest.fixture(scope="session")
def transition_report(transition_params):
    report = find_transition(TRANSITION_EPS, transition_params)
    logger.info(f"Transition bracket {report.bracket}, kink at eps={report.kink_eps}")
    return report


@pytest.fixture(scope="session")
def knee_minimizer():
    """Minimizer at eps=0.8 without Dirichlet nodes, started from the knee solution."""
    grid = build_grid(0.8, 20.0, 96, 96)
    return minimize_field(init_field(grid, BoundaryConfig(k=0), "knee"), tol=1e-6)
