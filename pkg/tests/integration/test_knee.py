import logging
import math

import numpy as np
import pytest

from databricks.labs.rcn.energy import energy
from databricks.labs.rcn.grid import BoundaryConfig, build_grid
from databricks.labs.rcn.optimize import init_field, minimize_field
from databricks.labs.rcn.selfdual import knee_energy, selfdual_residual

logger = logging.getLogger(__name__)


@pytest.mark.parametrize("eps", [0.8, 0.5])
def test_sampled_knee_energy_converges_to_closed_form(eps):
    expected = knee_energy(eps)
    errors = []
    for size in (64, 128, 256):
        field = init_field(build_grid(eps, 20.0, size, size), BoundaryConfig(k=0), "knee")
        errors.append(abs(energy(field).total - expected) / expected)
    logger.info(f"Relative knee energy errors at eps={eps}: {errors}")
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.02


def test_roll_relaxes_to_knee_energy():
    grid = build_grid(0.8, 20.0, 128, 128)
    result = minimize_field(init_field(grid, BoundaryConfig(k=0), "roll"), tol=1e-5)
    logger.info(f"Roll relaxed in {result.iterations} steps, converged={result.converged}")
    assert result.energy.total == pytest.approx(knee_energy(0.8), rel=0.05)
    assert result.field.delta < 0.0


def test_knee_minimizer_stays_near_the_sampled_knee(knee_minimizer):
    start = energy(init_field(knee_minimizer.field.grid, BoundaryConfig(k=0), "knee"))
    assert knee_minimizer.converged
    assert knee_minimizer.energy.total <= start.total
    assert knee_minimizer.energy.total == pytest.approx(knee_energy(0.8), rel=0.05)


def test_selfdual_residual_is_second_order():
    residuals = []
    for size in (64, 128, 256):
        field = init_field(build_grid(0.8, 20.0, size, size), BoundaryConfig(k=0), "knee")
        residuals.append(float(np.max(np.abs(selfdual_residual(field)[:, 1:-1]))))
    logger.info(f"Self-dual residuals of the sampled knee: {residuals}")
    assert residuals[0] > residuals[1] > residuals[2]
    assert math.log2(residuals[0] / residuals[2]) / 2 >= 1.8
