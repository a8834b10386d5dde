import logging
import math
from dataclasses import dataclass
from functools import cache

import numpy as np

from databricks.labs.rcn.bounds.fields import (
    ExtendField,
    SigmaVariant,
    SUBORDINATION_BOX,
    SubordinateField,
    SubordinationError,
    extend_field,
    squeeze_field,
)
from databricks.labs.rcn.bounds.ingredients import phi_bump, squeeze_integrand_slope
from databricks.labs.rcn.energy import energy
from databricks.labs.rcn.grid import PhaseField, centered_derivatives, pad_with_ghosts, trapezoid_weights
from databricks.labs.rcn.optimize import MinimizeResult

logger = logging.getLogger(__name__)

CERTIFICATE_SLACK = 0.01
CERTIFICATE_FLOOR = 1e-12


class BoundViolationError(RuntimeError):
    """A certified lower bound failed on a field, which cannot happen for a correct implementation."""

    def __init__(self, report: "BoundsReport"):
        super().__init__(
            f"Lower bound violated for the {report.variant} field at eps={report.eps}, a={report.a:.4f}: "
            f"energy {report.lhs:.6e} < {report.rhs:.6e}"
        )
        self.report = report


@dataclass(frozen=True)
class DivergenceIntegral:
    area: float  # trapezoid sum of div Sigma(grad theta) over the nodes
    boundary: float  # top - dirichlet - neumann
    top: float  # Sigma_2(eps, sqrt(1 - eps^2)) * ell
    dirichlet: float  # int over [0, a ell) of Sigma_2(0, theta_y(x, 0))
    neumann: float  # int over [a ell, ell) of Sigma_2(theta_x(x, 0), 0)
    side_mismatch: float  # |int Sigma_1 at x = 0 - int Sigma_1 at x = ell|

    @property
    def relative_gap(self) -> float:
        return abs(self.area - self.boundary) / max(abs(self.boundary), CERTIFICATE_FLOOR)


def _column_integral(values: np.ndarray, zeta: float) -> float:
    weights = np.full(values.shape, zeta)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return float(np.sum(weights * values))


def divergence_integral(field: PhaseField, sigma_field: SubordinateField) -> DivergenceIntegral:
    """
    Integrate div Sigma(grad theta) over the strip and compare with its boundary form.

    The area integral uses centered stencils and the chain rule, with trapezoid weights in y. The boundary
    form is Sigma_2(eps, sqrt(1 - eps^2)) ell - int_0^{a ell} Sigma_2(0, theta_y) dx - int_{a ell}^{ell}
    Sigma_2(theta_x, 0) dx; the side contributions at x = 0 and x = ell are measured separately.
    """
    grid, k = field.grid, field.k
    padded = pad_with_ghosts(field)
    derivs = centered_derivatives(padded, grid)
    parts = sigma_field.partials(derivs["x"], derivs["y"])
    divergence = parts["1p"] * derivs["xx"] + (parts["1q"] + parts["2p"]) * derivs["xy"] + parts["2q"] * derivs["yy"]
    area = float(np.sum(trapezoid_weights(grid) * divergence))

    top = float(sigma_field.sigma(grid.eps, grid.slope)[1]) * grid.ell
    dirichlet = grid.eta * float(np.sum(sigma_field.sigma(0.0, derivs["y"][:k, 0])[1]))
    neumann = grid.eta * float(np.sum(sigma_field.sigma(derivs["x"][k:, 0], 0.0)[1]))

    m = grid.m
    right_x = (padded[2, 1:-1] + math.pi - padded[m, 1:-1]) / (2.0 * grid.eta)
    right_y = (padded[m + 1, 2:] - padded[m + 1, :-2]) / (2.0 * grid.zeta)
    left = _column_integral(sigma_field.sigma(derivs["x"][0], derivs["y"][0])[0], grid.zeta)
    right = _column_integral(sigma_field.sigma(right_x, right_y)[0], grid.zeta)

    result = DivergenceIntegral(
        area=area,
        boundary=top - dirichlet - neumann,
        top=top,
        dirichlet=dirichlet,
        neumann=neumann,
        side_mismatch=abs(left - right),
    )
    logger.debug(
        f"Divergence integral ({sigma_field.variant.value}): area={area:.6e}, boundary={result.boundary:.6e}"
    )
    return result


def observation_constant(field: ExtendField, eps_values: np.ndarray | None = None) -> float:
    """Smallest K with Sigma_2(eps, sqrt(1 - eps^2)) >= M - K eps^2 over the sampled eps."""
    eps_values = np.linspace(0.02, 1.0, 50) if eps_values is None else np.asarray(eps_values, dtype=float)
    top = field.sigma(eps_values, np.sqrt(1.0 - eps_values**2))[1]
    return max(0.0, float(np.max((field.peak - top) / eps_values**2)))


@dataclass(frozen=True)
class LowerBoundConstants:
    c_squeeze: float  # sup |3 phi'(z) + 2 z phi''(z)|
    c_lipschitz: float  # sup over (0, 1] of (1 - phi(z)) / z
    e1: float
    k1: float
    peak: float  # M
    observation: float  # K
    c_extend: float  # measured C_sub of the extension field
    e2: float
    k2: float

    @property
    def energy_floor(self) -> float:
        """E1 = (e1 e2^2)^(1/3) / 3."""
        return (self.e1 * self.e2**2) ** (1.0 / 3.0) / 3.0

    @property
    def eps_star(self) -> float:
        product = self.e1 * self.e2**2
        first = product ** (1.0 / 6.0) / math.sqrt(self.k1) if self.k1 > 0.0 else math.inf
        second = product ** (1.0 / 3.0) / (2.0 * self.k2) if self.k2 > 0.0 else math.inf
        return min(first, second)

    def squeeze_bound(self, eps: float, a: float) -> float:
        if a >= 1.0:
            return math.inf
        return self.e1 * eps**2 / (1.0 - a) ** 2 - self.k1 * eps**2

    def extend_bound(self, eps: float, a: float) -> float:
        return self.e2 * (1.0 - a) / eps - self.k2 * eps

    def band(self, energy_cap: float) -> tuple[float, float]:
        """Band (sqrt(e1 / (2 E0)), 2 E0 / e2) that (1 - a) / eps must lie in when the energy is at most E0."""
        if energy_cap <= 0.0:
            raise ValueError(f"Energy cap must be positive, got {energy_cap}")
        return math.sqrt(self.e1 / (2.0 * energy_cap)), 2.0 * energy_cap / self.e2


@cache
def lower_bound_constants() -> LowerBoundConstants:
    """Measure the constants of the squeeze and extend lower bounds and the resulting energy floor."""
    z = np.linspace(-1.0, 2.0, 30001)
    c_squeeze = float(np.max(np.abs(squeeze_integrand_slope(z))))
    unit = np.linspace(1e-4, 1.0, 10000)
    c_lipschitz = float(np.max((1.0 - phi_bump(unit)) / unit))
    field = extend_field()
    peak = field.peak
    observation = observation_constant(field)
    c_extend = field.c_sub
    constants = LowerBoundConstants(
        c_squeeze=c_squeeze,
        c_lipschitz=c_lipschitz,
        e1=2.0 * math.pi * (1.0 - phi_bump(1.0)) / c_squeeze,
        k1=2.0 * math.pi * c_lipschitz / c_squeeze,
        peak=peak,
        observation=observation,
        c_extend=c_extend,
        e2=peak * math.pi / c_extend,
        k2=peak * math.pi * observation / c_extend,
    )
    logger.info(
        f"Lower bound constants: e1={constants.e1:.4e}, K1={constants.k1:.4e}, e2={constants.e2:.4e}, "
        f"K2={constants.k2:.4e}, E1={constants.energy_floor:.4e}, eps*={constants.eps_star:.4e}"
    )
    return constants


@dataclass(frozen=True)
class BoundsReport:
    variant: str
    eps: float
    a: float
    lhs: float  # discrete energy of the field
    rhs: float  # |area integral| / C_sub
    area: float
    boundary: float
    side_mismatch: float
    c_sub: float
    squeeze_bound: float
    extend_bound: float
    band: tuple[float, float]  # implied range of (1 - a) / eps with E0 = lhs
    passed: bool

    @property
    def scaling(self) -> float:
        return (1.0 - self.a) / self.eps

    @property
    def relative_gap(self) -> float:
        return abs(self.area - self.boundary) / max(abs(self.boundary), CERTIFICATE_FLOOR)

    def as_row(self) -> dict[str, float | str | bool]:
        return {
            "variant": self.variant,
            "eps": self.eps,
            "a": self.a,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "area": self.area,
            "boundary": self.boundary,
            "c_sub": self.c_sub,
            "squeeze_bound": self.squeeze_bound,
            "extend_bound": self.extend_bound,
            "band_lo": self.band[0],
            "band_hi": self.band[1],
            "passed": self.passed,
        }


def _sigma_field(field: PhaseField, variant: SigmaVariant) -> SubordinateField:
    if variant == SigmaVariant.EXTEND:
        return extend_field()
    if field.k >= field.grid.m:
        raise ValueError("The squeeze field needs a Neumann part, got a = 1")
    return squeeze_field((1.0 - field.a) / field.grid.eps)


def certify_lower_bound(
    target: MinimizeResult | PhaseField,
    variant: "str | SigmaVariant" = SigmaVariant.EXTEND,
    *,
    constants: LowerBoundConstants | None = None,
    slack: float = CERTIFICATE_SLACK,
) -> BoundsReport:
    """
    Check energy >= C_sub^-1 |int div Sigma(grad theta)| for one of the two vector fields.

    C_sub is the constant of the vector field alone, measured on the gradient square [-5, 5]^2. A field whose
    nodal gradients leave that square is refused rather than certified.

    :param target: a minimization result or a field satisfying the boundary conditions
    :param variant: squeeze or extend
    :param constants: lower bound constants, measured once when omitted
    :param slack: relative slack of the comparison
    :return: the report, with both lower bound forms evaluated
    :raises BoundViolationError: when the inequality fails
    :raises SubordinationError: when a nodal gradient lies outside the sampled square
    """
    if isinstance(target, MinimizeResult):
        if not target.converged:
            logger.warning(f"Certifying an unconverged field (|grad|={target.grad_norm:.3e})")
        field = target.field
    else:
        field = target
    kind = SigmaVariant.parse(variant)
    sigma_field = _sigma_field(field, kind)
    constants = constants or lower_bound_constants()

    derivs = centered_derivatives(pad_with_ghosts(field), field.grid)
    reach = float(max(np.max(np.abs(derivs["x"])), np.max(np.abs(derivs["y"]))))
    if reach > SUBORDINATION_BOX:
        raise SubordinationError(
            f"Field gradients reach {reach:.3f}, outside the square [-{SUBORDINATION_BOX}, {SUBORDINATION_BOX}]^2 "
            f"where C_sub of the {kind.value} field was measured"
        )
    c_sub = sigma_field.c_sub
    integral = divergence_integral(field, sigma_field)
    lhs = energy(field).total
    rhs = abs(integral.area) / c_sub
    eps, a = field.grid.eps, field.a
    report = BoundsReport(
        variant=kind.value,
        eps=eps,
        a=a,
        lhs=lhs,
        rhs=rhs,
        area=integral.area,
        boundary=integral.boundary,
        side_mismatch=integral.side_mismatch,
        c_sub=c_sub,
        squeeze_bound=constants.squeeze_bound(eps, a),
        extend_bound=constants.extend_bound(eps, a),
        band=constants.band(lhs) if lhs > 0.0 else (0.0, 0.0),
        passed=lhs >= (1.0 - slack) * rhs - CERTIFICATE_FLOOR,
    )
    if report.squeeze_bound <= 0.0:
        logger.warning(f"Squeeze bound is non-binding at eps={eps}, a={a:.4f}")
    if not report.passed:
        raise BoundViolationError(report)
    logger.info(f"Certified {kind.value} bound at eps={eps}, a={a:.4f}: {lhs:.6e} >= {rhs:.6e}")
    return report
