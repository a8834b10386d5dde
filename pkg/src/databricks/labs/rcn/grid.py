import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


MIN_NODES = 8


class DirichletReflection(Enum):
    """Ghost rule for the j = -1 row on the Dirichlet part of the midline."""

    ODD = "odd"
    EVEN = "even"


@dataclass(frozen=True)
class StripGrid:
    """Uniform grid on one shift-period [0, pi/eps) x [0, height] of the half-strip.

    Node (i, j) sits at x_i = i * eta, y_j = j * zeta with 0 <= i < m and 0 <= j <= n.
    """

    eps: float  # dimensionless wavenumber, 0 < eps <= 1
    height: float  # strip height L
    m: int  # node count in x
    n: int  # cell count in y

    @property
    def ell(self) -> float:
        return math.pi / self.eps

    @property
    def eta(self) -> float:
        return math.pi / (self.eps * self.m)

    @property
    def zeta(self) -> float:
        return self.height / self.n

    @property
    def slope(self) -> float:
        """Far-field y-wavenumber sqrt(1 - eps^2) of the roll pattern."""
        return math.sqrt(max(0.0, 1.0 - self.eps**2))

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n + 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.m) * self.eta

    @property
    def y(self) -> np.ndarray:
        nodes = np.arange(self.n + 1) * self.zeta
        nodes[-1] = self.height
        return nodes

    @property
    def phase_x(self) -> np.ndarray:
        """The x-part of the roll pattern at the nodes, eps * x_i = pi * i / m."""
        return math.pi * np.arange(self.m) / self.m

    def top_row(self, delta: float) -> np.ndarray:
        return self.phase_x + self.slope * self.height + delta

    def ghost_row(self, delta: float) -> np.ndarray:
        return self.phase_x + self.slope * (self.height + self.zeta) + delta

    def roll(self, delta: float) -> np.ndarray:
        """Roll pattern eps * x + sqrt(1 - eps^2) * y + delta sampled on every node."""
        values = self.phase_x[:, None] + self.slope * self.y[None, :] + delta
        values[:, -1] = self.top_row(delta)
        return values

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass(frozen=True)
class BoundaryConfig:
    """Midline data: the first k nodes of row j = 0 carry theta = 0, the rest carry a zero normal derivative."""

    k: int  # Dirichlet node count
    delta: float = 0.0  # asymptotic phase shift
    reflection: DirichletReflection = DirichletReflection.ODD

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"Dirichlet node count must be non-negative, got k={self.k}")
        if not math.isfinite(self.delta):
            raise ValueError(f"Phase shift must be finite, got delta={self.delta}")

    def with_delta(self, delta: float) -> "BoundaryConfig":
        return replace(self, delta=float(delta))


@dataclass
class PhaseField:
    values: np.ndarray  # shape (m, n + 1), values[i, j] = theta_{i,j}
    grid: StripGrid
    config: BoundaryConfig

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"Phase field has shape {self.values.shape}, expected {self.grid.shape}")
        if self.config.k > self.grid.m:
            raise ValueError(f"Dirichlet node count k={self.config.k} exceeds m={self.grid.m}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Phase field contains non-finite values")

    @property
    def delta(self) -> float:
        return self.config.delta

    @property
    def k(self) -> int:
        return self.config.k

    @property
    def a(self) -> float:
        """Dirichlet fraction k / m."""
        return self.config.k / self.grid.m

    def copy(self) -> "PhaseField":
        return PhaseField(self.values.copy(), self.grid, self.config)

    def with_values(self, values: np.ndarray, delta: float | None = None) -> "PhaseField":
        config = self.config if delta is None else self.config.with_delta(delta)
        return PhaseField(values, self.grid, config)

    def satisfies_bc(self, atol: float = 0.0) -> bool:
        projected = project_onto_bc(self.values, self.grid, self.config)
        return bool(np.allclose(self.values, projected, rtol=0.0, atol=atol))


def build_grid(eps: float, height: float, m: int, n: int) -> StripGrid:
    """
    Build the computational grid for one shift-period of the half-strip.

    :param eps: wavenumber parameter in (0, 1]
    :param height: strip height L > 0
    :param m: node count in x, at least 8
    :param n: cell count in y, at least 8
    :return: the grid with spacings eta = pi / (eps * m) and zeta = height / n
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if not height > 0.0 or not math.isfinite(height):
        raise ValueError(f"Strip height must be positive and finite, got {height}")
    if m < MIN_NODES or n < MIN_NODES:
        raise ValueError(f"Grid needs at least {MIN_NODES} nodes per direction, got m={m}, n={n}")
    return StripGrid(eps=float(eps), height=float(height), m=int(m), n=int(n))


def project_onto_bc(values: np.ndarray, grid: StripGrid, config: BoundaryConfig) -> np.ndarray:
    """Returns a copy of the nodal values with the top row, the Dirichlet nodes and the Neumann tie imposed."""
    projected = np.array(values, dtype=float, copy=True)
    projected[:, -1] = grid.top_row(config.delta)
    projected[: config.k, 0] = 0.0
    projected[config.k :, 0] = projected[config.k :, 1]
    return projected


def apply_bc(field: PhaseField) -> PhaseField:
    return field.with_values(project_onto_bc(field.values, field.grid, field.config))


def sample_field(
    grid: StripGrid,
    config: BoundaryConfig,
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    *,
    project: bool = True,
) -> PhaseField:
    """
    Sample theta(x, y) on the nodes of the grid.

    :param grid: target grid
    :param config: boundary data the field is bound to
    :param func: vectorized theta(x, y)
    :param project: impose the discrete boundary conditions after sampling
    :return: the sampled field
    """
    x_nodes, y_nodes = grid.meshgrid()
    values = np.broadcast_to(func(x_nodes, y_nodes), grid.shape).astype(float)
    if project:
        values = project_onto_bc(values, grid, config)
    return PhaseField(values, grid, config)


def _reflected_row(values: np.ndarray, config: BoundaryConfig) -> np.ndarray:
    row = values[:, 1].copy()
    if config.reflection == DirichletReflection.ODD:
        k = config.k
        row[:k] = 2.0 * values[:k, 0] - values[:k, 1]
    return row


def pad_with_ghosts(field: PhaseField) -> np.ndarray:
    """
    Extend the nodal values by one ghost layer on every side.

    The result has shape (m + 2, n + 3) and padded[i + 1, j + 1] = theta_{i,j} for i in [-1, m], j in [-1, n + 1].
    Ghost columns follow the shift-periodicity theta(x + ell, y) = theta(x, y) + pi, the top ghost row the roll
    pattern and the bottom ghost row the reflection rule of the boundary config.
    """
    grid, config = field.grid, field.config
    padded = np.empty((grid.m + 2, grid.n + 3))
    padded[1:-1, 1:-1] = field.values
    padded[1:-1, -1] = grid.ghost_row(config.delta)
    padded[1:-1, 0] = _reflected_row(field.values, config)
    padded[0, :] = padded[grid.m, :] - math.pi
    padded[-1, :] = padded[1, :] + math.pi
    return padded


def ghost_value(field: PhaseField, i: int, j: int) -> float:
    """
    Value of theta at node (i, j) of the extended index range i in [-1, m], j in [-1, n + 1].

    :param field: the phase field
    :param i: x-index
    :param j: y-index
    :return: the stored value for interior nodes, the ghost rule value otherwise
    """
    grid, config = field.grid, field.config
    if not (-1 <= i <= grid.m and -1 <= j <= grid.n + 1):
        raise ValueError(f"Index ({i}, {j}) lies outside the ghost range [-1, {grid.m}] x [-1, {grid.n + 1}]")
    if i == -1:
        return ghost_value(field, grid.m - 1, j) - math.pi
    if i == grid.m:
        return ghost_value(field, 0, j) + math.pi
    if j == grid.n + 1:
        return math.pi * i / grid.m + grid.slope * (grid.height + grid.zeta) + config.delta
    if j == -1:
        if i < config.k and config.reflection == DirichletReflection.ODD:
            return float(2.0 * field.values[i, 0] - field.values[i, 1])
        return float(field.values[i, 1])
    return float(field.values[i, j])


def laplacian_stencil(field: PhaseField, i: int, j: int) -> float:
    """Five-point discrete Laplacian (dx+ dx- + dy+ dy-) theta at node (i, j)."""
    grid = field.grid
    if not (0 <= i < grid.m and 0 <= j <= grid.n):
        raise ValueError(f"Stencil centre ({i}, {j}) must be a grid node")
    centre = field.values[i, j]
    d2x = (ghost_value(field, i + 1, j) - 2.0 * centre + ghost_value(field, i - 1, j)) / grid.eta**2
    d2y = (ghost_value(field, i, j + 1) - 2.0 * centre + ghost_value(field, i, j - 1)) / grid.zeta**2
    return float(d2x + d2y)


def laplacian(field: PhaseField) -> np.ndarray:
    """Vectorized laplacian_stencil over every node."""
    return laplacian_of_padded(pad_with_ghosts(field), field.grid)


def laplacian_of_padded(padded: np.ndarray, grid: StripGrid) -> np.ndarray:
    centre = padded[1:-1, 1:-1]
    d2x = (padded[2:, 1:-1] - 2.0 * centre + padded[:-2, 1:-1]) / grid.eta**2
    d2y = (padded[1:-1, 2:] - 2.0 * centre + padded[1:-1, :-2]) / grid.zeta**2
    return d2x + d2y


def centered_derivatives(padded: np.ndarray, grid: StripGrid) -> dict[str, np.ndarray]:
    """Centered first and second differences of a padded array at every node."""
    eta, zeta = grid.eta, grid.zeta
    centre = padded[1:-1, 1:-1]
    return {
        "x": (padded[2:, 1:-1] - padded[:-2, 1:-1]) / (2.0 * eta),
        "y": (padded[1:-1, 2:] - padded[1:-1, :-2]) / (2.0 * zeta),
        "xx": (padded[2:, 1:-1] - 2.0 * centre + padded[:-2, 1:-1]) / eta**2,
        "yy": (padded[1:-1, 2:] - 2.0 * centre + padded[1:-1, :-2]) / zeta**2,
        "xy": (padded[2:, 2:] - padded[2:, :-2] - padded[:-2, 2:] + padded[:-2, :-2]) / (4.0 * eta * zeta),
    }


def trapezoid_weights(grid: StripGrid) -> np.ndarray:
    """Nodal quadrature weights: periodic rectangle rule in x, trapezoid rule in y."""
    weights = np.full(grid.shape, grid.eta * grid.zeta)
    weights[:, 0] *= 0.5
    weights[:, -1] *= 0.5
    return weights
