import logging
import math
import warnings
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import partial

import numpy as np
from databricks.labs.blueprint.parallel import Threads
from scipy.optimize import line_search

from databricks.labs.rcn.energy import EnergyBreakdown, energy, gradient
from databricks.labs.rcn.grid import (
    BoundaryConfig,
    DirichletReflection,
    PhaseField,
    StripGrid,
    build_grid,
    project_onto_bc,
    sample_field,
)
from databricks.labs.rcn.selfdual import default_height, knee, knee_phase_shift, zipper_seed

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITERS = 20000
WOLFE_C1 = 1e-4
WOLFE_C2 = 0.1
# the window quoted for the knee to zipper bifurcation, (cos 0.37 pi, cos 0.35 pi)
REFERENCE_WINDOW = (math.cos(0.37 * math.pi), math.cos(0.35 * math.pi))


class SeedKind(Enum):
    ROLL = "roll"
    KNEE = "knee"
    ZIPPER = "zipper-seed"

    @classmethod
    def parse(cls, kind: "str | SeedKind") -> "SeedKind":
        if isinstance(kind, SeedKind):
            return kind
        try:
            return cls(kind)
        except ValueError:
            allowed = ", ".join(seed.value for seed in cls)
            raise ValueError(f"Unknown seed kind '{kind}', expected one of: {allowed}") from None


@dataclass(frozen=True)
class MinimizeResult:
    field: PhaseField
    energy: EnergyBreakdown
    grad_norm: float  # max-norm of the projected gradient at the returned iterate
    iterations: int  # accepted conjugate-gradient steps
    converged: bool
    tolerance: float


@dataclass(frozen=True)
class SweepRecord:
    eps: float
    k: int
    a: float
    delta_star: float
    energy_total: float
    energy_bending: float
    energy_strain: float
    converged: bool
    iterations: int
    seed: str  # seed kind that produced the lowest energy
    minimizer: PhaseField | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TransitionReport:
    bracket: tuple[float, float] | None  # (eps_hi, eps_lo) around the jump of argmin_a from 0 to > 0
    optima: list[SweepRecord]  # lowest-energy record per eps, in input order
    sweeps: dict[float, list[SweepRecord]]
    kink_eps: float | None  # eps with the largest three-point slope change of E(eps)

    @property
    def in_reference_window(self) -> bool:
        if self.bracket is None:
            return False
        eps_hi, eps_lo = self.bracket
        return eps_lo < REFERENCE_WINDOW[1] and eps_hi > REFERENCE_WINDOW[0]


def init_field(grid: StripGrid, config: BoundaryConfig, kind: "str | SeedKind") -> PhaseField:
    """
    Initial field satisfying the discrete boundary conditions.

    :param grid: the grid
    :param config: boundary data; the knee and zipper seeds replace delta with their own phase shift
    :param kind: roll, knee or zipper-seed
    :return: the projected field
    """
    seed = SeedKind.parse(kind)
    if seed == SeedKind.ROLL:
        return PhaseField(project_onto_bc(grid.roll(config.delta), grid, config), grid, config)
    if seed == SeedKind.KNEE:
        shifted = config.with_delta(knee_phase_shift(grid.eps, grid.height))
        return sample_field(grid, shifted, lambda x, y: knee(x, y, grid.eps))
    return zipper_seed(grid, config)


def perturb_field(phase: PhaseField, amplitude: float, seed: int = 0) -> PhaseField:
    """Add seeded Gaussian noise of the given amplitude to the nodal values and re-impose the boundary conditions."""
    if amplitude == 0.0:
        return phase
    rng = np.random.default_rng(seed)
    values = phase.values + amplitude * rng.standard_normal(phase.values.shape)
    return PhaseField(project_onto_bc(values, phase.grid, phase.config), phase.grid, phase.config)


class _Objective:
    """Energy as a function of the free coordinates: rows 1..n-1 flattened, followed by delta."""

    def __init__(self, template: PhaseField):
        self._template = template
        self._cached_x: np.ndarray | None = None
        self._cached: tuple[float, np.ndarray] | None = None

    @property
    def size(self) -> int:
        grid = self._template.grid
        return grid.m * (grid.n - 1) + 1

    def pack(self, phase: PhaseField) -> np.ndarray:
        return np.concatenate([phase.values[:, 1:-1].ravel(), [phase.delta]])

    def unpack(self, coords: np.ndarray) -> PhaseField:
        grid, config = self._template.grid, self._template.config.with_delta(coords[-1])
        values = self._template.values.copy()
        values[:, 1:-1] = coords[:-1].reshape(grid.m, grid.n - 1)
        return PhaseField(project_onto_bc(values, grid, config), grid, config)

    def _evaluate(self, coords: np.ndarray) -> tuple[float, np.ndarray]:
        if self._cached_x is not None and self._cached is not None and np.array_equal(coords, self._cached_x):
            return self._cached
        if not np.all(np.isfinite(coords)):
            return math.inf, np.zeros_like(coords)
        phase = self.unpack(coords)
        grad = gradient(phase)
        result = energy(phase).total, np.concatenate([grad.nodal[:, 1:-1].ravel(), [grad.ddelta]])
        self._cached_x, self._cached = coords.copy(), result
        return result

    def value(self, coords: np.ndarray) -> float:
        return self._evaluate(coords)[0]

    def gradient(self, coords: np.ndarray) -> np.ndarray:
        return self._evaluate(coords)[1]


def minimize_field(
    phase: PhaseField,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    *,
    callback: Callable[[int, float], None] | None = None,
) -> MinimizeResult:
    """
    Minimize the discrete energy over the free nodal values and delta with Polak-Ribiere+ conjugate gradients.

    Steps come from a strong Wolfe line search (c1 = 1e-4, c2 = 0.1). The direction is reset to steepest
    descent when beta < 0, when it stops being a descent direction, every (number of unknowns) steps, and
    once after a failed line search; a second consecutive failure ends the run unconverged.

    :param phase: initial field, satisfying the boundary conditions
    :param tol: target max-norm of the projected gradient
    :param max_iters: cap on accepted steps
    :param callback: called as callback(iteration, energy) after every accepted step
    :return: the final iterate and its diagnostics
    """
    if tol <= 0.0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    if not phase.satisfies_bc(atol=1e-12):
        raise ValueError("Initial field must satisfy the discrete boundary conditions")

    objective = _Objective(phase)
    coords = objective.pack(phase)
    value, grad = objective.value(coords), objective.gradient(coords)
    direction = -grad
    previous_value: float | None = None
    since_restart = 0
    iterations = 0
    converged = False
    logger.debug(f"CG start eps={phase.grid.eps} k={phase.k}: {objective.size} unknowns, energy={value:.8f}")

    while iterations < max_iters:
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm <= tol:
            converged = True
            break
        if since_restart >= objective.size or float(grad @ direction) >= 0.0:
            direction, since_restart = -grad, 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=RuntimeWarning)
            step, _, _, new_value, _, _ = line_search(
                objective.value,
                objective.gradient,
                coords,
                direction,
                gfk=grad,
                old_fval=value,
                old_old_fval=previous_value,
                c1=WOLFE_C1,
                c2=WOLFE_C2,
            )
        if step is None or new_value is None:
            if since_restart == 0:
                logger.debug(f"Line search failed along steepest descent after {iterations} steps")
                break
            logger.debug(f"Line search failed after {iterations} steps, restarting")
            direction, since_restart, previous_value = -grad, 0, None
            continue

        coords = coords + step * direction
        new_grad = objective.gradient(coords)
        beta = max(0.0, float(new_grad @ (new_grad - grad)) / max(float(grad @ grad), np.finfo(float).tiny))
        direction = -new_grad + beta * direction
        previous_value, value, grad = value, float(new_value), new_grad
        since_restart += 1
        iterations += 1
        if callback is not None:
            callback(iterations, value)
        if iterations % 100 == 0:
            logger.debug(f"CG step {iterations}: energy={value:.10f}, |grad|={float(np.max(np.abs(grad))):.3e}")

    final = objective.unpack(coords)
    grad_norm = float(np.max(np.abs(grad)))
    result = MinimizeResult(
        field=final,
        energy=energy(final),
        grad_norm=grad_norm,
        iterations=iterations,
        converged=converged,
        tolerance=tol,
    )
    if converged:
        logger.info(
            f"Minimized eps={final.grid.eps} a={final.a:.4f}: energy={result.energy.total:.8f} in {iterations} steps"
        )
    else:
        logger.warning(
            f"No convergence for eps={final.grid.eps} a={final.a:.4f} after {iterations} steps: "
            f"|grad|={grad_norm:.3e} > {tol:.1e}"
        )
    return result


def _minimize_seed(
    grid: StripGrid, config: BoundaryConfig, seed: SeedKind, tol: float, max_iters: int
) -> tuple[int, SeedKind, MinimizeResult]:
    start = init_field(grid, config, seed)
    return config.k, seed, minimize_field(start, tol, max_iters)


def _record(grid: StripGrid, k: int, seed: SeedKind, result: MinimizeResult) -> SweepRecord:
    return SweepRecord(
        eps=grid.eps,
        k=k,
        a=k / grid.m,
        delta_star=result.field.delta,
        energy_total=result.energy.total,
        energy_bending=result.energy.bending,
        energy_strain=result.energy.strain,
        converged=result.converged,
        iterations=result.iterations,
        seed=seed.value,
        minimizer=result.field,
    )


def _failed_record(grid: StripGrid, k: int) -> SweepRecord:
    return SweepRecord(
        eps=grid.eps,
        k=k,
        a=k / grid.m,
        delta_star=math.nan,
        energy_total=math.nan,
        energy_bending=math.nan,
        energy_strain=math.nan,
        converged=False,
        iterations=0,
        seed="none",
    )


def sweep_a(
    grid: StripGrid,
    k_list: Iterable[int],
    seeds: Sequence["str | SeedKind"] = (SeedKind.KNEE, SeedKind.ZIPPER),
    *,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    num_threads: int | None = None,
    reflection: DirichletReflection = DirichletReflection.ODD,
) -> list[SweepRecord]:
    """
    Minimize over (field, delta) for every Dirichlet node count, keeping the best seed per count.

    :param grid: the grid
    :param k_list: Dirichlet node counts in [0, m]
    :param seeds: seed kinds tried for every count
    :param tol: gradient tolerance of each minimization
    :param max_iters: step cap of each minimization
    :param num_threads: thread pool size
    :param reflection: ghost rule on the Dirichlet nodes
    :return: one record per count, sorted by a
    """
    k_values = sorted(set(k_list))
    seed_kinds = [SeedKind.parse(seed) for seed in seeds]
    if not k_values:
        raise ValueError("Dirichlet node count list is empty")
    if not seed_kinds:
        raise ValueError("At least one seed kind is required")
    if k_values[0] < 0 or k_values[-1] > grid.m:
        raise ValueError(f"Dirichlet node counts must lie in [0, {grid.m}], got {k_values}")

    tasks = []
    for k in k_values:
        config = BoundaryConfig(k=k, reflection=reflection)
        for seed in seed_kinds:
            if seed == SeedKind.ZIPPER and k == grid.m:
                continue
            tasks.append(partial(_minimize_seed, grid, config, seed, tol, max_iters))
    results, errors = Threads.gather(f"sweep over a at eps={grid.eps}", tasks, num_threads)
    for error in errors:
        logger.warning(f"Seed skipped at eps={grid.eps}: {error}")

    by_k: dict[int, list[tuple[int, SeedKind, MinimizeResult]]] = {k: [] for k in k_values}
    for k, seed, result in results:
        by_k[k].append((k, seed, result))
    records = []
    for k in k_values:
        candidates = sorted(by_k[k], key=lambda item: (item[2].energy.total, item[1].value))
        if not candidates:
            logger.warning(f"Every seed failed at eps={grid.eps}, k={k}")
            records.append(_failed_record(grid, k))
            continue
        records.append(_record(grid, *candidates[0]))
    return records


def local_minima(records: Sequence[SweepRecord]) -> list[SweepRecord]:
    """Records whose energy is below that of their neighbours on the E(a) curve."""
    curve = [record for record in sorted(records, key=lambda r: r.a) if math.isfinite(record.energy_total)]
    minima = []
    for idx, record in enumerate(curve):
        left = curve[idx - 1].energy_total if idx > 0 else math.inf
        right = curve[idx + 1].energy_total if idx + 1 < len(curve) else math.inf
        if record.energy_total < left and record.energy_total < right:
            minima.append(record)
    return minima


def slope_jump(eps_values: Sequence[float], energies: Sequence[float]) -> tuple[int, float] | None:
    """
    Three-point slope comparison along E(eps).

    :return: (index, |right slope - left slope|) of the interior point with the largest change, or None when
        fewer than three points are given
    """
    if len(eps_values) < 3:
        return None
    best: tuple[int, float] | None = None
    for idx in range(1, len(eps_values) - 1):
        left = (energies[idx] - energies[idx - 1]) / (eps_values[idx] - eps_values[idx - 1])
        right = (energies[idx + 1] - energies[idx]) / (eps_values[idx + 1] - eps_values[idx])
        change = abs(right - left)
        if best is None or change > best[1]:
            best = (idx, change)
    return best


def default_k_values(m: int, count: int = 17) -> list[int]:
    return sorted({round(m * t) for t in np.linspace(0.0, 1.0, count)})


@dataclass(frozen=True)
class SweepParams:
    m: int = 96
    n: int = 96
    height: float | None = None  # None selects max(20, 8 / eps)
    k_values: tuple[int, ...] | None = None  # None selects an even spread over [0, m]
    seeds: tuple[SeedKind, ...] = (SeedKind.KNEE, SeedKind.ZIPPER)
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    num_threads: int | None = None
    reflection: DirichletReflection = DirichletReflection.ODD

    def grid_for(self, eps: float) -> StripGrid:
        return build_grid(eps, self.height or default_height(eps), self.m, self.n)

    def k_for(self, grid: StripGrid) -> list[int]:
        return list(self.k_values) if self.k_values else default_k_values(grid.m)


def best_record(records: Sequence[SweepRecord]) -> SweepRecord:
    finite = [record for record in records if math.isfinite(record.energy_total)]
    if not finite:
        raise ValueError("No finite energy among the sweep records")
    return min(finite, key=lambda record: (record.energy_total, record.a))


def find_transition(eps_list: Sequence[float], params: SweepParams | None = None) -> TransitionReport:
    """
    Locate the jump of argmin_a from 0 to a positive value along a descending list of eps.

    :param eps_list: at least two values, strictly decreasing
    :param params: sweep settings
    :return: the bracket (or None when no jump is seen), the per-eps optima and the full sweeps
    """
    params = params or SweepParams()
    eps_values = [float(eps) for eps in eps_list]
    if len(eps_values) < 2:
        raise ValueError("Bracketing a transition needs at least 2 eps values")
    if any(hi <= lo for hi, lo in zip(eps_values, eps_values[1:])):
        raise ValueError(f"eps values must be strictly decreasing, got {eps_values}")

    sweeps: dict[float, list[SweepRecord]] = {}
    optima = []
    for eps in eps_values:
        grid = params.grid_for(eps)
        records = sweep_a(
            grid,
            params.k_for(grid),
            params.seeds,
            tol=params.tol,
            max_iters=params.max_iters,
            num_threads=params.num_threads,
            reflection=params.reflection,
        )
        sweeps[eps] = records
        optimum = best_record(records)
        optima.append(optimum)
        logger.info(f"eps={eps}: argmin a={optimum.a:.4f} ({optimum.seed}), energy={optimum.energy_total:.6f}")

    bracket = None
    for upper, lower in zip(optima, optima[1:]):
        if upper.a == 0.0 and lower.a > 0.0:
            bracket = (upper.eps, lower.eps)
            break
    kink = slope_jump(eps_values, [optimum.energy_total for optimum in optima])
    report = TransitionReport(
        bracket=bracket,
        optima=optima,
        sweeps=sweeps,
        kink_eps=eps_values[kink[0]] if kink else None,
    )
    if bracket is None:
        logger.warning(f"No knee to zipper jump detected over eps in [{eps_values[-1]}, {eps_values[0]}]")
    elif not report.in_reference_window:
        logger.warning(f"Transition bracket {bracket} lies outside the reference window {REFERENCE_WINDOW}")
    return report
