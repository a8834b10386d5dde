import math

import numpy as np
import pytest

from databricks.labs.rcn.grid import (
    BoundaryConfig,
    DirichletReflection,
    PhaseField,
    apply_bc,
    build_grid,
    ghost_value,
    laplacian,
    laplacian_stencil,
    pad_with_ghosts,
    project_onto_bc,
    sample_field,
    trapezoid_weights,
)


def test_build_grid_spacings():
    grid = build_grid(1.0, 10.0, 8, 8)
    assert grid.eta == pytest.approx(math.pi / 8)
    assert grid.zeta == pytest.approx(1.25)
    assert grid.slope == 0.0


def test_build_grid_period():
    grid = build_grid(0.5, 20.0, 16, 16)
    assert grid.ell == pytest.approx(2 * math.pi)
    assert grid.eta == pytest.approx(2 * math.pi / 16)
    assert grid.shape == (16, 17)
    assert grid.y[-1] == 20.0


@pytest.mark.parametrize(
    "eps, height, m, n, message",
    [
        (0.0, 10.0, 8, 8, "eps must lie in"),
        (1.5, 10.0, 8, 8, "eps must lie in"),
        (0.5, 0.0, 8, 8, "Strip height must be positive"),
        (0.5, math.inf, 8, 8, "Strip height must be positive"),
        (0.5, 10.0, 4, 8, "at least 8 nodes"),
        (0.5, 10.0, 8, 7, "at least 8 nodes"),
    ],
)
def test_build_grid_rejects_invalid_input(eps, height, m, n, message):
    with pytest.raises(ValueError, match=message):
        build_grid(eps, height, m, n)


def test_boundary_config_rejects_negative_k():
    with pytest.raises(ValueError, match="must be non-negative"):
        BoundaryConfig(k=-1)


def test_phase_field_validation(tiny_grid):
    with pytest.raises(ValueError, match="expected"):
        PhaseField(np.zeros((8, 8)), tiny_grid, BoundaryConfig(k=0))
    with pytest.raises(ValueError, match="exceeds m"):
        PhaseField(np.zeros(tiny_grid.shape), tiny_grid, BoundaryConfig(k=9))
    values = np.zeros(tiny_grid.shape)
    values[2, 3] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        PhaseField(values, tiny_grid, BoundaryConfig(k=0))


def test_ghost_value_left_image(tiny_grid):
    values = np.zeros(tiny_grid.shape)
    values[tiny_grid.m - 1, 3] = 2.0
    field = PhaseField(values, tiny_grid, BoundaryConfig(k=0))
    assert ghost_value(field, -1, 3) == pytest.approx(2.0 - math.pi)


def test_ghost_value_top_row(tiny_grid):
    field = PhaseField(np.zeros(tiny_grid.shape), tiny_grid, BoundaryConfig(k=0, delta=0.25))
    for i in range(tiny_grid.m):
        expected = math.pi * i / tiny_grid.m + tiny_grid.slope * (tiny_grid.height + tiny_grid.zeta) + 0.25
        assert ghost_value(field, i, tiny_grid.n + 1) == pytest.approx(expected)


def test_ghost_value_top_row_vanishes_for_flat_rolls():
    grid = build_grid(1.0, 10.0, 8, 8)
    field = PhaseField(np.zeros(grid.shape), grid, BoundaryConfig(k=0))
    assert ghost_value(field, 0, grid.n + 1) == 0.0


def test_ghost_value_outside_range(tiny_grid):
    field = PhaseField(np.zeros(tiny_grid.shape), tiny_grid, BoundaryConfig(k=0))
    with pytest.raises(ValueError, match="outside the ghost range"):
        ghost_value(field, tiny_grid.m + 1, 0)
    with pytest.raises(ValueError, match="outside the ghost range"):
        ghost_value(field, 0, -2)


@pytest.mark.parametrize(
    "reflection, expected", [(DirichletReflection.ODD, -0.3), (DirichletReflection.EVEN, 0.3)]
)
def test_bottom_ghost_on_dirichlet_nodes(tiny_grid, reflection, expected):
    values = np.zeros(tiny_grid.shape)
    values[:, 1] = 0.3
    field = PhaseField(values, tiny_grid, BoundaryConfig(k=4, reflection=reflection))
    assert ghost_value(field, 2, -1) == pytest.approx(expected)
    # Neumann nodes always reflect evenly
    assert ghost_value(field, 6, -1) == pytest.approx(0.3)


def test_shift_periodicity(rough_field):
    grid = rough_field.grid
    for j in range(-1, grid.n + 2):
        assert ghost_value(rough_field, grid.m, j) - ghost_value(rough_field, 0, j) == pytest.approx(math.pi)


def test_padded_array_matches_ghost_values(tiny_grid):
    rng = np.random.default_rng(3)
    config = BoundaryConfig(k=3, delta=-0.4)
    field = PhaseField(project_onto_bc(rng.standard_normal(tiny_grid.shape), tiny_grid, config), tiny_grid, config)
    padded = pad_with_ghosts(field)
    assert padded.shape == (tiny_grid.m + 2, tiny_grid.n + 3)
    for i in range(-1, tiny_grid.m + 1):
        for j in range(-1, tiny_grid.n + 2):
            assert padded[i + 1, j + 1] == pytest.approx(ghost_value(field, i, j), abs=1e-12)


def test_laplacian_of_affine_field_vanishes(small_grid):
    field = sample_field(
        small_grid,
        BoundaryConfig(k=0),
        lambda x, y: 0.3 + small_grid.eps * x + 0.7 * y,
        project=False,
    )
    for i in range(small_grid.m):
        for j in range(1, small_grid.n):
            assert laplacian_stencil(field, i, j) == pytest.approx(0.0, abs=1e-9)


def test_laplacian_of_parabola(small_grid):
    field = sample_field(small_grid, BoundaryConfig(k=0), lambda x, y: x**2, project=False)
    for i in range(1, small_grid.m - 1):
        for j in range(1, small_grid.n):
            assert laplacian_stencil(field, i, j) == pytest.approx(2.0, abs=1e-9)


def test_laplacian_stencil_rejects_ghost_centres(tiny_grid):
    field = PhaseField(np.zeros(tiny_grid.shape), tiny_grid, BoundaryConfig(k=0))
    with pytest.raises(ValueError, match="must be a grid node"):
        laplacian_stencil(field, -1, 0)


def test_vectorized_laplacian_matches_stencil(rough_field):
    grid = rough_field.grid
    vectorized = laplacian(rough_field)
    for i in range(grid.m):
        for j in range(grid.n + 1):
            assert vectorized[i, j] == pytest.approx(laplacian_stencil(rough_field, i, j), rel=1e-12, abs=1e-9)


def test_laplacian_converges_at_second_order():
    errors = []
    for size in (16, 32, 64):
        grid = build_grid(1.0, 2.0, size, size)
        field = sample_field(grid, BoundaryConfig(k=0), lambda x, y: np.sin(2 * x) * np.cos(y) + x, project=False)
        x_nodes, y_nodes = grid.meshgrid()
        exact = -5.0 * np.sin(2 * x_nodes) * np.cos(y_nodes)
        errors.append(float(np.max(np.abs(laplacian(field) - exact)[:, 1:-1])))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.15)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=0.15)


def test_projection_imposes_boundary_conditions(small_grid, half_dirichlet):
    rng = np.random.default_rng(11)
    field = PhaseField(rng.standard_normal(small_grid.shape), small_grid, half_dirichlet)
    assert not field.satisfies_bc()
    projected = apply_bc(field)
    assert projected.satisfies_bc()
    assert np.all(projected.values[: half_dirichlet.k, 0] == 0.0)
    np.testing.assert_array_equal(projected.values[half_dirichlet.k :, 0], projected.values[half_dirichlet.k :, 1])
    np.testing.assert_allclose(projected.values[:, -1], small_grid.top_row(0.0))


def test_trapezoid_weights_cover_the_period(small_grid):
    assert float(np.sum(trapezoid_weights(small_grid))) == pytest.approx(small_grid.ell * small_grid.height)


def test_sample_field_without_projection_keeps_values(tiny_grid):
    field = sample_field(tiny_grid, BoundaryConfig(k=2), lambda x, y: x + y, project=False)
    x_nodes, y_nodes = tiny_grid.meshgrid()
    np.testing.assert_allclose(field.values, x_nodes + y_nodes)
    assert field.a == pytest.approx(2 / 8)
