import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from databricks.labs.blueprint.parallel import Threads

from databricks.labs.rcn.energy import EnergyBreakdown, energy
from databricks.labs.rcn.grid import (
    BoundaryConfig,
    PhaseField,
    StripGrid,
    build_grid,
    project_onto_bc,
    sample_field,
)
from databricks.labs.rcn.selfdual.profiles import (
    QaProfile,
    QaShape,
    dirichlet_trace,
    knee,
    knee_phase_shift,
    smooth_step,
)

logger = logging.getLogger(__name__)

MIN_MODES = 8
MODE_CUTOFF = 1e-12
MIN_SAMPLES = 16384
DEFAULT_BLEND_RADIUS = 1.0
FAR_FIELD_FROM = 0.5  # fraction of the strip height where the blend into the roll pattern starts


class PositivityError(ValueError):
    """The self-dual construction produced a non-positive w, so theta = eps x - log w is undefined."""


@dataclass(frozen=True)
class SelfDualSolution:
    """Decaying Fourier solution w(x, y) = sum_n w_n exp(-lambda_n y) exp(2 pi i n x / ell) on the strip."""

    orders: np.ndarray  # mode numbers -N..N
    modes: np.ndarray  # complex coefficients of the boundary trace
    decay_rates: np.ndarray  # sqrt(1 + eps^2 (2n + i)^2), principal branch
    eps: float
    ell: float
    dirichlet_end: float  # a * ell, end of the Dirichlet part of the trace
    trace: Callable | None = field(default=None, compare=False, repr=False)

    @property
    def truncation(self) -> int:
        return int(np.max(self.orders))

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * math.pi * self.orders / self.ell

    @property
    def potential_modes(self) -> np.ndarray:
        """Coefficients 2 * lambda_n * w_n of the potential p."""
        return 2.0 * self.decay_rates * self.modes

    @property
    def mean(self) -> float:
        """Zeroth coefficient; w ~ mean * exp(-sqrt(1 - eps^2) y) for large y."""
        return float(self.modes[self.orders == 0][0].real)

    @property
    def phase_shift(self) -> float:
        return -math.log(self.mean)

    def evaluate(self, x, y, dx: int = 0, dy: int = 0) -> np.ndarray:
        """
        Evaluate w (or a derivative) on the tensor grid x by y.

        :param x: 1-d array of abscissae
        :param y: 1-d array of heights
        :param dx: order of the x-derivative
        :param dy: order of the y-derivative
        :return: real array of shape (len(x), len(y))
        """
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        along_x = np.exp(1j * np.multiply.outer(x_arr, self.wavenumbers)) * (1j * self.wavenumbers) ** dx
        along_y = np.exp(-np.multiply.outer(self.decay_rates, y_arr)) * ((-self.decay_rates) ** dy)[:, None]
        values = along_x @ (self.modes[:, None] * along_y)
        scale = max(1.0, float(np.max(np.abs(values.real))))
        imaginary = float(np.max(np.abs(values.imag)))
        if imaginary > 1e-10 * scale:
            logger.warning(f"Self-dual evaluation has imaginary part {imaginary:.2e} relative to {scale:.2e}")
        return values.real

    def helmholtz_residual(self, grid: StripGrid) -> float:
        """Max relative residual of lap w - 2 eps w_x - (1 - eps^2) w with centered differences at interior nodes."""
        eta, zeta = grid.eta, grid.zeta
        x_ext = np.arange(-1, grid.m + 1) * eta
        values = self.evaluate(x_ext, np.arange(grid.n + 1) * zeta)
        centre = values[1:-1, 1:-1]
        d2x = (values[2:, 1:-1] - 2.0 * centre + values[:-2, 1:-1]) / eta**2
        d2y = (values[1:-1, 2:] - 2.0 * centre + values[1:-1, :-2]) / zeta**2
        d1x = (values[2:, 1:-1] - values[:-2, 1:-1]) / (2.0 * eta)
        residual = d2x + d2y - 2.0 * self.eps * d1x - (1.0 - self.eps**2) * centre
        return float(np.max(np.abs(residual)) / np.max(np.abs(centre)))


def _decay_rates(orders: np.ndarray, eps: float) -> np.ndarray:
    return np.sqrt(1.0 + eps**2 * (2.0 * orders + 1j) ** 2)


def _truncation(coefficients: np.ndarray, samples: int) -> int:
    magnitudes = np.abs(coefficients[: samples // 2])
    significant = np.nonzero(magnitudes >= MODE_CUTOFF * magnitudes[0])[0]
    truncation = max(MIN_MODES, int(significant[-1]) if significant.size else 0)
    cap = samples // 2 - 1
    if truncation >= cap:
        logger.warning(f"Trace is not resolved by {samples} samples, keeping {cap} modes")
    return min(truncation, cap)


def solve_dirichlet_selfdual(
    boundary_trace: Callable,
    grid: StripGrid,
    modes: int | None = None,
    *,
    dirichlet_end: float = 0.0,
) -> SelfDualSolution:
    """
    Fourier solution of the linearized self-dual problem on the shift-periodic strip for a given trace w(x, 0).

    :param boundary_trace: vectorized, ell-periodic trace w(x, 0), strictly positive
    :param grid: grid providing eps and the resolution
    :param modes: fixed truncation N >= 8; by default the smallest N whose dropped coefficients fall below
        1e-12 of the mean
    :param dirichlet_end: a * ell, kept for the blending step
    :return: the solution
    """
    if modes is not None and modes < MIN_MODES:
        raise ValueError(f"Need at least {MIN_MODES} Fourier modes, got {modes}")
    samples = max(8 * grid.m, MIN_SAMPLES, 4 * (modes or 0))
    x_samples = np.arange(samples) * grid.ell / samples
    trace_values = np.asarray(boundary_trace(x_samples), dtype=float)
    if not np.all(np.isfinite(trace_values)) or np.min(trace_values) <= 0.0:
        raise PositivityError(f"Boundary trace must be finite and positive, minimum is {np.min(trace_values):.3e}")

    coefficients = np.fft.fft(trace_values) / samples
    truncation = modes if modes is not None else _truncation(coefficients, samples)
    orders = np.arange(-truncation, truncation + 1)
    retained = coefficients[np.mod(orders, samples)]
    # real trace, so enforce exact conjugate symmetry
    retained = 0.5 * (retained + np.conj(retained[::-1]))
    logger.debug(f"Self-dual solve at eps={grid.eps}: {samples} trace samples, N={truncation}")
    return SelfDualSolution(
        orders=orders,
        modes=retained,
        decay_rates=_decay_rates(orders, grid.eps),
        eps=grid.eps,
        ell=grid.ell,
        dirichlet_end=dirichlet_end,
        trace=boundary_trace,
    )


def blend_weight(grid: StripGrid, dirichlet_end: float, blend_radius: float) -> np.ndarray:
    """
    Partition function phi_2 on the nodes: 1 within blend_radius / 2 of the Neumann segment, 0 beyond it.

    Distances are periodic in x, so the segment [dirichlet_end, ell] also reaches the nodes just right of x = 0.
    """
    x_nodes, y_nodes = grid.meshgrid()
    along = np.where(x_nodes >= dirichlet_end, 0.0, np.minimum(x_nodes, dirichlet_end - x_nodes))
    distance = np.hypot(along, y_nodes)
    half = 0.5 * blend_radius
    return 1.0 - smooth_step((distance - half) / half)


def default_blend_radius(ell: float, dirichlet_end: float) -> float:
    return min(DEFAULT_BLEND_RADIUS, 0.5 * (ell - dirichlet_end))


def far_field_weight(grid: StripGrid) -> np.ndarray:
    """Weight of the roll pattern per row: 0 below half the strip height, rising smoothly to 1 at the top."""
    start = FAR_FIELD_FROM * grid.height
    return smooth_step((grid.y - start) / (grid.height - start))


def blended_w(solution: SelfDualSolution, grid: StripGrid, blend_radius: float) -> np.ndarray:
    """
    Nodal values of w~ = (1 - phi_2) w + phi_2 w(x, 0) cosh(y).

    :param solution: the Fourier solution
    :param grid: target grid
    :param blend_radius: radius of the modified neighbourhood of the Neumann segment
    :return: array of shape (m, n + 1)
    """
    if blend_radius <= 0.0:
        raise ValueError(f"Blend radius must be positive, got {blend_radius}")
    values = solution.evaluate(grid.x, grid.y)
    modified = values[:, :1] * np.cosh(grid.y)[None, :]
    weight = blend_weight(grid, solution.dirichlet_end, blend_radius)
    blended = (1.0 - weight) * values + weight * modified
    if np.min(blended) <= 0.0:
        raise PositivityError(f"Blended self-dual function is not positive, minimum is {np.min(blended):.3e}")
    return blended


def blend_test_function(
    solution: SelfDualSolution,
    grid: StripGrid,
    blend_radius: float | None = None,
    config: BoundaryConfig | None = None,
) -> PhaseField:
    """
    Blend w with w(x, 0) cosh(y) near the Neumann segment and return theta = eps x - log(w~).

    Over the upper half of the strip theta is blended into the roll pattern, which the top row must match.

    :param solution: the Fourier solution
    :param grid: target grid
    :param blend_radius: radius of the modified neighbourhood; defaults to the smaller of 1 and half the segment
    :param config: boundary data; by default k counts the nodes left of the Dirichlet end
    :return: a field satisfying the discrete boundary conditions, with delta = -log(w_0)
    """
    if blend_radius is None:
        blend_radius = default_blend_radius(solution.ell, solution.dirichlet_end)
    if config is None:
        config = BoundaryConfig(k=int(math.ceil(solution.dirichlet_end / grid.eta - 1e-9)))

    blended = blended_w(solution, grid, blend_radius)
    config = config.with_delta(solution.phase_shift)
    theta = grid.phase_x[:, None] - np.log(blended)
    theta += far_field_weight(grid)[None, :] * (grid.roll(config.delta) - theta)
    return PhaseField(project_onto_bc(theta, grid, config), grid, config)


def zipper_seed(
    grid: StripGrid,
    config: BoundaryConfig,
    *,
    shape: "str | QaShape" = QaShape.RAMP,
    nu: float | None = None,
    gamma: float = 0.5,
    sigma_small: float | None = None,
    blend_radius: float | None = None,
) -> PhaseField:
    """
    Blended self-dual test function whose Neumann segment is the last m - k nodes of the midline.

    The width parameter is c = (1 - a) / eps, so the trace switches to q_a exactly at node k.
    """
    if config.k >= grid.m:
        raise ValueError(f"Zipper seed needs a Neumann part, got k={config.k} for m={grid.m}")
    width = (1.0 - config.k / grid.m) / grid.eps
    profile = QaProfile.create(grid.eps, c=width, nu=nu, gamma=gamma, sigma_small=sigma_small, shape=shape)
    solution = solve_dirichlet_selfdual(dirichlet_trace(profile), grid, dirichlet_end=profile.start)
    return blend_test_function(solution, grid, blend_radius, config)


def knee_test_function(grid: StripGrid) -> PhaseField:
    """Sampled knee solution without Dirichlet nodes, matched to the roll pattern at the top."""
    config = BoundaryConfig(k=0, delta=knee_phase_shift(grid.eps, grid.height))
    return sample_field(grid, config, lambda x, y: knee(x, y, grid.eps))


def default_height(eps: float) -> float:
    return max(20.0, 8.0 / eps)


@dataclass(frozen=True)
class ProbeParams:
    spacing: float = 0.1  # node spacing in x and y when m or n is not given
    m: int | None = None
    n: int | None = None
    height: float | None = None  # None selects max(20, 8 / eps)
    widths: tuple[float, ...] = (1.0, 1.5, 2.0)  # width parameters c, 1 - a = c eps
    blend_radii: tuple[float, ...] = (0.5, 1.0, 2.0)
    shape: QaShape = QaShape.RAMP
    nu: float | None = None
    gamma: float = 0.5
    sigma_small: float | None = None
    knee_branch: bool = True  # also offer the sampled knee solution, a = 0
    num_threads: int | None = None

    def grid_for(self, eps: float) -> StripGrid:
        height = self.height or default_height(eps)
        if self.spacing <= 0.0:
            raise ValueError(f"Grid spacing must be positive, got {self.spacing}")
        m = self.m or math.ceil(math.pi / (eps * self.spacing))
        n = self.n or math.ceil(height / self.spacing)
        return build_grid(eps, height, m, n)


@dataclass(frozen=True)
class ProbeRecord:
    eps: float
    a: float
    energy: EnergyBreakdown
    branch: str  # zipper or knee
    width: float | None = None  # realized c = (1 - a) / eps of the zipper branch
    blend_radius: float | None = None


def _zipper_candidate(grid: StripGrid, k: int, blend_radius: float, params: ProbeParams) -> ProbeRecord:
    seed = zipper_seed(
        grid,
        BoundaryConfig(k=k),
        shape=params.shape,
        nu=params.nu,
        gamma=params.gamma,
        sigma_small=params.sigma_small,
        blend_radius=blend_radius,
    )
    breakdown = energy(seed)
    width = (1.0 - seed.a) / grid.eps
    logger.debug(f"Zipper test function eps={grid.eps}, c={width:.4f}, radius={blend_radius}: {breakdown.total:.6f}")
    return ProbeRecord(grid.eps, seed.a, breakdown, "zipper", width, blend_radius)


def _knee_candidate(grid: StripGrid) -> ProbeRecord:
    breakdown = energy(knee_test_function(grid))
    logger.debug(f"Knee test function eps={grid.eps}: {breakdown.total:.6f}")
    return ProbeRecord(grid.eps, 0.0, breakdown, "knee")


def _dirichlet_counts(grid: StripGrid, widths: Iterable[float]) -> list[int]:
    counts = []
    for width in widths:
        if width <= 0.0 or width * grid.eps > 1.0:
            logger.debug(f"Width c={width} is not admissible at eps={grid.eps}")
            continue
        k = round((1.0 - width * grid.eps) * grid.m)
        if k < grid.m and k not in counts:
            counts.append(k)
    return counts


def upper_bound_probe(eps_list: Iterable[float], params: ProbeParams | None = None) -> list[ProbeRecord]:
    """
    Lowest energy over the admissible test functions for every eps.

    The zipper branch is the blended self-dual test function with 1 - a = c eps for every width c and blend
    radius of the parameters; the Dirichlet node count is rounded to the grid, so the realized fraction is k / m.
    The knee branch, when enabled, is the sampled knee solution.

    :param eps_list: wavenumber parameters in (0, 1]
    :param params: grids and construction parameters
    :return: one record per eps, the lowest-energy candidate
    :raises ValueError: when no candidate can be built for some eps
    """
    params = params or ProbeParams()
    records = []
    for eps in eps_list:
        grid = params.grid_for(eps)
        tasks: list[Callable[[], ProbeRecord]] = [
            partial(_zipper_candidate, grid, k, radius, params)
            for k in _dirichlet_counts(grid, params.widths)
            for radius in params.blend_radii
        ]
        if params.knee_branch:
            tasks.append(partial(_knee_candidate, grid))
        if not tasks:
            raise ValueError(f"No admissible test function at eps={eps}")
        candidates, errors = Threads.gather(f"test functions at eps={eps}", tasks, params.num_threads)
        for error in errors:
            logger.warning(f"Test function skipped at eps={eps}: {error}")
        if not candidates:
            raise ValueError(f"No admissible test function at eps={eps}")
        best = min(candidates, key=lambda record: record.energy.total)
        logger.info(
            f"Upper bound probe eps={eps}: {best.branch} branch, a={best.a:.4f}, energy={best.energy.total:.6f} "
            f"({len(candidates)} test functions on {grid.m}x{grid.n})"
        )
        records.append(best)
    return records
