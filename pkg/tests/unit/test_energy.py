import numpy as np
import pytest

from databricks.labs.rcn.energy import (
    boundary_identity_residual,
    energy,
    energy_density,
    energy_in_box,
    energy_of_padded,
    gradient,
)
from databricks.labs.rcn.grid import (
    BoundaryConfig,
    DirichletReflection,
    PhaseField,
    build_grid,
    project_onto_bc,
    sample_field,
)
from databricks.labs.rcn.optimize import perturb_field


@pytest.fixture
def flat_roll():
    grid = build_grid(1.0, 10.0, 16, 16)
    return PhaseField(grid.roll(0.3), grid, BoundaryConfig(k=0, delta=0.3))


def _energy_with(field: PhaseField, values: np.ndarray, delta: float) -> float:
    grid, config = field.grid, field.config.with_delta(delta)
    return energy(PhaseField(project_onto_bc(values, grid, config), grid, config)).total


def test_roll_pattern_has_zero_energy(flat_roll):
    assert flat_roll.satisfies_bc()
    breakdown = energy(flat_roll)
    assert breakdown.bending == pytest.approx(0.0, abs=1e-20)
    assert breakdown.strain == pytest.approx(0.0, abs=1e-20)
    assert breakdown.total == pytest.approx(0.0, abs=1e-20)


def test_roll_pattern_is_critical(flat_roll):
    grad = gradient(flat_roll)
    assert grad.max_norm() == pytest.approx(0.0, abs=1e-10)


def test_flat_padded_array_has_unit_strain_density(small_grid):
    breakdown = energy_of_padded(np.zeros((small_grid.m + 2, small_grid.n + 3)), small_grid)
    assert breakdown.bending == 0.0
    assert breakdown.strain == pytest.approx(small_grid.eta * small_grid.zeta * small_grid.m * (small_grid.n + 1))


def test_padded_shape_is_checked(small_grid):
    with pytest.raises(ValueError, match="Padded array has shape"):
        energy_of_padded(np.zeros(small_grid.shape), small_grid)


def test_breakdown_parts_are_non_negative(rough_field):
    breakdown = energy(rough_field)
    assert breakdown.bending > 0.0
    assert breakdown.strain > 0.0
    assert breakdown.total == pytest.approx(breakdown.bending + breakdown.strain)


def test_density_sums_to_energy(rough_field):
    bending, strain = energy_density(rough_field)
    cell = rough_field.grid.eta * rough_field.grid.zeta
    breakdown = energy(rough_field)
    assert cell * float(np.sum(bending)) == pytest.approx(breakdown.bending)
    assert cell * float(np.sum(strain)) == pytest.approx(breakdown.strain)


def test_energy_in_box(rough_field):
    grid = rough_field.grid
    whole = energy_in_box(rough_field, 0.0, grid.ell, 0.0, grid.height)
    assert whole.total == pytest.approx(energy(rough_field).total)
    lower, upper = (
        energy_in_box(rough_field, 0.0, grid.ell, 0.0, grid.height / 2),
        energy_in_box(rough_field, 0.0, grid.ell, grid.height / 2 + grid.zeta / 2, grid.height),
    )
    assert lower.total + upper.total == pytest.approx(whole.total)
    empty = energy_in_box(rough_field, grid.ell + 1.0, grid.ell + 2.0, 0.0, grid.height)
    assert empty.total == 0.0


def test_gradient_matches_finite_differences(rough_field):
    grid = rough_field.grid
    grad = gradient(rough_field)
    delta = rough_field.delta
    rng = np.random.default_rng(2024)
    for _ in range(100):
        i, j = int(rng.integers(grid.m)), int(rng.integers(1, grid.n))
        step = 1e-6 * (1.0 + abs(rough_field.values[i, j]))
        up, down = rough_field.values.copy(), rough_field.values.copy()
        up[i, j] += step
        down[i, j] -= step
        expected = (_energy_with(rough_field, up, delta) - _energy_with(rough_field, down, delta)) / (2.0 * step)
        assert grad.nodal[i, j] == pytest.approx(expected, rel=1e-5, abs=1e-6), f"node ({i}, {j})"


def test_delta_derivative_matches_finite_differences(knee_field):
    step = 1e-6
    delta = knee_field.delta
    expected = (
        _energy_with(knee_field, knee_field.values, delta + step)
        - _energy_with(knee_field, knee_field.values, delta - step)
    ) / (2.0 * step)
    assert gradient(knee_field).ddelta == pytest.approx(expected, rel=1e-5, abs=1e-6)


def test_gradient_vanishes_on_constrained_nodes(rough_field):
    grad = gradient(rough_field)
    assert np.all(grad.nodal[:, 0] == 0.0)
    assert np.all(grad.nodal[:, -1] == 0.0)


def test_boundary_identity_vanishes_for_rolls(flat_roll):
    assert boundary_identity_residual(flat_roll) == pytest.approx(0.0, abs=1e-9)


def _shifted(field: PhaseField, columns: int) -> PhaseField:
    values = np.roll(field.values, columns, axis=0)
    values[:columns] -= np.pi
    return field.with_values(values, field.delta - np.pi * columns / field.grid.m)


@pytest.mark.parametrize("columns", [1, 5, 15])
def test_energy_is_covariant_under_x_translation(small_grid, columns):
    field = perturb_field(PhaseField(small_grid.roll(0.2), small_grid, BoundaryConfig(k=0, delta=0.2)), 0.05, seed=3)
    shifted = _shifted(field, columns)
    assert shifted.satisfies_bc(atol=1e-12)
    assert energy(shifted).bending == pytest.approx(energy(field).bending, rel=1e-10)
    assert energy(shifted).strain == pytest.approx(energy(field).strain, rel=1e-10)


def test_even_reflection_gradient_matches_finite_differences(small_grid):
    config = BoundaryConfig(k=small_grid.m // 2, reflection=DirichletReflection.EVEN)
    roll = PhaseField(project_onto_bc(small_grid.roll(0.0), small_grid, config), small_grid, config)
    field = perturb_field(roll, 0.05)
    grad = gradient(field)
    nodes = [(i, 1) for i in range(small_grid.m)] + [(3, 2), (12, 5), (0, small_grid.n - 1)]
    for i, j in nodes:
        step = 1e-6 * (1.0 + abs(field.values[i, j]))
        up, down = field.values.copy(), field.values.copy()
        up[i, j] += step
        down[i, j] -= step
        expected = (_energy_with(field, up, field.delta) - _energy_with(field, down, field.delta)) / (2.0 * step)
        assert grad.nodal[i, j] == pytest.approx(expected, rel=1e-5, abs=1e-6), f"node ({i}, {j})"


def test_even_and_odd_reflections_differ_on_dirichlet_nodes(rough_field):
    even = PhaseField(
        rough_field.values,
        rough_field.grid,
        BoundaryConfig(k=rough_field.k, delta=rough_field.delta, reflection=DirichletReflection.EVEN),
    )
    difference = gradient(even).nodal - gradient(rough_field).nodal
    assert float(np.max(np.abs(difference[: rough_field.k, 1]))) > 0.0
    np.testing.assert_allclose(difference[rough_field.k + 1 :, 3:], 0.0, atol=1e-12)


def _bumped(m: int) -> PhaseField:
    grid = build_grid(0.5, 10.0, m, m)

    def theta(x, y):
        return 0.5 * x + grid.slope * y + 0.3 * np.cos(2.0 * x) * np.exp(-((y / 2.0) ** 2))

    return sample_field(grid, BoundaryConfig(k=0), theta)


def test_boundary_identity_residual_shrinks_under_refinement():
    residuals = [boundary_identity_residual(_bumped(m)) for m in (32, 64, 128)]
    assert residuals[0] > 1e-6
    assert residuals[0] > residuals[1] > residuals[2]
    assert residuals[2] < residuals[0] / 4.0
