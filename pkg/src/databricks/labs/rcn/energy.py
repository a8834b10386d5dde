import logging
from dataclasses import dataclass

import numpy as np

from databricks.labs.rcn.grid import (
    DirichletReflection,
    PhaseField,
    StripGrid,
    BoundaryConfig,
    centered_derivatives,
    pad_with_ghosts,
    trapezoid_weights,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyBreakdown:
    bending: float  # eta * zeta * sum of the squared discrete Laplacian
    strain: float  # eta * zeta * sum of (averaged squared one-sided slopes - 1)^2

    @property
    def total(self) -> float:
        return self.bending + self.strain


@dataclass(frozen=True)
class EnergyGradient:
    nodal: np.ndarray  # dF/dtheta_{i,j}, zero on constrained nodes
    ddelta: float  # dF/ddelta through the top row and the top ghost row

    def max_norm(self) -> float:
        return max(float(np.max(np.abs(self.nodal))), abs(self.ddelta))


@dataclass(frozen=True)
class _Stencils:
    laplacian: np.ndarray
    strain: np.ndarray
    dxp: np.ndarray
    dxm: np.ndarray
    dyp: np.ndarray
    dym: np.ndarray


def _stencils(padded: np.ndarray, grid: StripGrid) -> _Stencils:
    centre = padded[1:-1, 1:-1]
    dxp = (padded[2:, 1:-1] - centre) / grid.eta
    dxm = (centre - padded[:-2, 1:-1]) / grid.eta
    dyp = (padded[1:-1, 2:] - centre) / grid.zeta
    dym = (centre - padded[1:-1, :-2]) / grid.zeta
    laplacian = (dxp - dxm) / grid.eta + (dyp - dym) / grid.zeta
    strain = 0.5 * (dxp**2 + dxm**2 + dyp**2 + dym**2) - 1.0
    return _Stencils(laplacian, strain, dxp, dxm, dyp, dym)


def _require_finite(field: PhaseField):
    if not np.all(np.isfinite(field.values)) or not np.isfinite(field.delta):
        raise ValueError("Energy is undefined for a phase field with non-finite values")


def energy_of_padded(padded: np.ndarray, grid: StripGrid, mask: np.ndarray | None = None) -> EnergyBreakdown:
    """
    Discrete energy of an already padded array, without applying any ghost rule.

    :param padded: array of shape (m + 2, n + 3) holding nodes and ghosts
    :param grid: the grid the array lives on
    :param mask: optional boolean (m, n + 1) array restricting the sums
    :return: the energy breakdown
    """
    if padded.shape != (grid.m + 2, grid.n + 3):
        raise ValueError(f"Padded array has shape {padded.shape}, expected {(grid.m + 2, grid.n + 3)}")
    parts = _stencils(padded, grid)
    bending = parts.laplacian**2
    strain = parts.strain**2
    if mask is not None:
        bending = bending[mask]
        strain = strain[mask]
    cell = grid.eta * grid.zeta
    return EnergyBreakdown(bending=cell * float(np.sum(bending)), strain=cell * float(np.sum(strain)))


def energy(field: PhaseField) -> EnergyBreakdown:
    _require_finite(field)
    return energy_of_padded(pad_with_ghosts(field), field.grid)


def energy_density(field: PhaseField) -> tuple[np.ndarray, np.ndarray]:
    """Nodal bending and strain densities, so that energy = eta * zeta * sum(density)."""
    _require_finite(field)
    parts = _stencils(pad_with_ghosts(field), field.grid)
    return parts.laplacian**2, parts.strain**2


def energy_in_box(field: PhaseField, x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> EnergyBreakdown:
    """
    Energy sums restricted to the nodes inside [x_lo, x_hi] x [y_lo, y_hi].

    An empty box yields a zero breakdown.
    """
    grid = field.grid
    slack_x, slack_y = 1e-9 * grid.eta, 1e-9 * grid.zeta
    x_nodes, y_nodes = grid.meshgrid()
    mask = (
        (x_nodes >= x_lo - slack_x)
        & (x_nodes <= x_hi + slack_x)
        & (y_nodes >= y_lo - slack_y)
        & (y_nodes <= y_hi + slack_y)
    )
    if not np.any(mask):
        return EnergyBreakdown(bending=0.0, strain=0.0)
    _require_finite(field)
    return energy_of_padded(pad_with_ghosts(field), grid, mask)


def _fold_ghosts(padded_grad: np.ndarray, grid: StripGrid, config: BoundaryConfig) -> EnergyGradient:
    m, k = grid.m, config.k
    # shift-periodic images carry the derivative back to the columns they copy
    padded_grad[m, :] += padded_grad[0, :]
    padded_grad[1, :] += padded_grad[m + 1, :]
    nodal = padded_grad[1:-1, 1:-1].copy()
    ddelta = float(np.sum(padded_grad[1:-1, -1]))

    bottom = padded_grad[1:-1, 0]
    nodal[:, 1] += bottom
    if config.reflection == DirichletReflection.ODD:
        nodal[:k, 1] -= 2.0 * bottom[:k]
        nodal[:k, 0] += 2.0 * bottom[:k]

    ddelta += float(np.sum(nodal[:, -1]))
    nodal[:, -1] = 0.0
    nodal[:k, 0] = 0.0
    nodal[k:, 1] += nodal[k:, 0]
    nodal[k:, 0] = 0.0
    return EnergyGradient(nodal=nodal, ddelta=ddelta)


def gradient(field: PhaseField) -> EnergyGradient:
    """
    Exact gradient of the discrete energy with respect to the free nodal values and delta.

    Free values are rows 1..n-1; row 0 is either fixed (Dirichlet nodes) or tied to row 1, and row n follows
    the roll pattern shifted by delta. Contributions of ghost cells are folded back onto the values they copy.
    """
    _require_finite(field)
    grid = field.grid
    eta, zeta = grid.eta, grid.zeta
    padded = pad_with_ghosts(field)
    parts = _stencils(padded, grid)
    weight = 2.0 * eta * zeta
    d_lap = weight * parts.laplacian
    d_strain = weight * parts.strain

    grad = np.zeros_like(padded)
    grad[1:-1, 1:-1] += -2.0 * d_lap * (1.0 / eta**2 + 1.0 / zeta**2) + d_strain * (
        (parts.dxm - parts.dxp) / eta + (parts.dym - parts.dyp) / zeta
    )
    grad[2:, 1:-1] += d_lap / eta**2 + d_strain * parts.dxp / eta
    grad[:-2, 1:-1] += d_lap / eta**2 - d_strain * parts.dxm / eta
    grad[1:-1, 2:] += d_lap / zeta**2 + d_strain * parts.dyp / zeta
    grad[1:-1, :-2] += d_lap / zeta**2 - d_strain * parts.dym / zeta
    return _fold_ghosts(grad, grid, field.config)


def boundary_identity_residual(field: PhaseField) -> float:
    """
    Discrete residual of the integration-by-parts identity between the Laplacian and the Hessian forms,

        |int (lap theta)^2 - int |hess theta|^2 - 2 * contour_int theta_x d(theta_y)|,

    with centered stencils, trapezoid weights in y and the side contributions cancelled by shift-periodicity.
    """
    _require_finite(field)
    grid = field.grid
    derivs = centered_derivatives(pad_with_ghosts(field), grid)
    weights = trapezoid_weights(grid)
    laplace_sq = float(np.sum(weights * (derivs["xx"] + derivs["yy"]) ** 2))
    hessian_sq = float(np.sum(weights * (derivs["xx"] ** 2 + 2.0 * derivs["xy"] ** 2 + derivs["yy"] ** 2)))

    def row_term(j: int) -> float:
        theta_x = derivs["x"][:, j]
        theta_y = derivs["y"][:, j]
        along = (np.roll(theta_y, -1) - np.roll(theta_y, 1)) / (2.0 * grid.eta)
        return grid.eta * float(np.sum(theta_x * along))

    contour = row_term(0) - row_term(grid.n)
    residual = abs(laplace_sq - hessian_sq - 2.0 * contour)
    logger.debug(f"Identity residual {residual:.3e} (laplace={laplace_sq:.6e}, hessian={hessian_sq:.6e})")
    return residual
