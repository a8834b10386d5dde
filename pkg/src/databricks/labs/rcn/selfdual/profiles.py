import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from databricks.labs.rcn.grid import PhaseField, centered_derivatives, pad_with_ghosts

logger = logging.getLogger(__name__)


def knee(x, y, eps: float):
    """Self-dual knee solution eps * x + log cosh(sqrt(1 - eps^2) * y); vectorized in x and y."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    slope = math.sqrt(1.0 - eps**2)
    scaled = slope * np.asarray(y, dtype=float)
    return eps * np.asarray(x, dtype=float) + np.logaddexp(scaled, -scaled) - math.log(2.0)


def knee_energy(eps: float) -> float:
    """Energy per shift-period of the knee solution in the infinite strip, 4 pi sqrt(1 - eps^2) / (3 eps)."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    return 4.0 * math.pi * math.sqrt(1.0 - eps**2) / (3.0 * eps)


def knee_phase_shift(eps: float, height: float) -> float:
    """Phase shift that makes the knee solution match the roll pattern at y = height; tends to -log 2."""
    slope = math.sqrt(max(0.0, 1.0 - eps**2))
    scaled = slope * height
    return float(np.logaddexp(scaled, -scaled) - math.log(2.0) - scaled)


def selfdual_residual(field: PhaseField) -> np.ndarray:
    """Nodal residual lap(theta) - (1 - |grad theta|^2) with centered stencils."""
    derivs = centered_derivatives(pad_with_ghosts(field), field.grid)
    return derivs["xx"] + derivs["yy"] - (1.0 - derivs["x"] ** 2 - derivs["y"] ** 2)


def _check_theta_args(t: float, tol: float):
    if t <= 0.0:
        raise ValueError(f"theta3 needs a positive time argument, got t={t}")
    if tol <= 0.0:
        raise ValueError(f"Truncation tolerance must be positive, got tol={tol}")


def theta3(u, t: float, ell: float, tol: float = 1e-17):
    """
    Jacobi theta series 1 + 2 * sum_{n >= 1} exp(-(2 pi / ell)^2 n^2 t) cos(2 pi n u).

    :param u: normalized first argument (period 1), scalar or array
    :param t: heat-kernel time, positive
    :param ell: spatial period
    :param tol: terms below this size are dropped
    :return: the truncated series
    """
    _check_theta_args(t, tol)
    rate = (2.0 * math.pi / ell) ** 2 * t
    last = max(1, math.ceil(math.sqrt(math.log(2.0 / tol) / rate)))
    orders = np.arange(1, last + 1)
    weights = np.exp(-rate * orders**2)
    u_arr = np.asarray(u, dtype=float)
    terms = weights * np.cos(2.0 * math.pi * np.multiply.outer(u_arr, orders))
    return 1.0 + 2.0 * np.sum(terms, axis=-1)


def theta3_lattice(u, t: float, ell: float, tol: float = 1e-17):
    """Gaussian lattice sum (ell / sqrt(4 pi t)) * sum_n exp(-ell^2 (u - n)^2 / (4 t)), the dual form of theta3."""
    _check_theta_args(t, tol)
    u_arr = np.asarray(u, dtype=float)
    reach = math.sqrt(4.0 * t * math.log(1.0 / tol)) / ell + 1.0
    lattice = np.arange(math.floor(np.min(u_arr) - reach), math.ceil(np.max(u_arr) + reach) + 1)
    offsets = np.subtract.outer(u_arr, lattice)
    terms = np.exp(-(ell**2) * offsets**2 / (4.0 * t))
    return ell / math.sqrt(4.0 * math.pi * t) * np.sum(terms, axis=-1)


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t_arr = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        rising = np.where(t_arr > 0.0, np.exp(-1.0 / np.where(t_arr > 0.0, t_arr, 1.0)), 0.0)
        falling = np.where(t_arr < 1.0, np.exp(-1.0 / np.where(t_arr < 1.0, 1.0 - t_arr, 1.0)), 0.0)
    return rising / (rising + falling)


class QaShape(Enum):
    """How q_a connects e^{eps x} to e^{eps x - pi} across the Neumann interval."""

    TANH = "tanh"  # partition blends around the compressed tanh profile
    RAMP = "ramp"  # phase eps x - log q_a rising from 0 to pi along a smooth step

    @classmethod
    def parse(cls, shape: "str | QaShape") -> "QaShape":
        if isinstance(shape, QaShape):
            return shape
        try:
            return cls(shape)
        except ValueError:
            raise ValueError(f"Unknown q_a shape '{shape}', expected tanh or ramp") from None


@dataclass(frozen=True)
class QaProfile:
    """Boundary profile on the Neumann interval [ell - c pi, ell] of width c pi, where 1 - a = c eps."""

    eps: float
    c: float  # width parameter
    nu: float  # inset of the tanh interval from both ends
    gamma: float  # overshoot of the tanh plateaus, 0 < gamma < 1
    sigma_small: float  # half-width of the partition transitions, smaller than nu
    shape: QaShape = QaShape.TANH

    @classmethod
    def create(
        cls,
        eps: float,
        c: float = 1.0,
        nu: float | None = None,
        gamma: float = 0.5,
        sigma_small: float | None = None,
        shape: "str | QaShape" = QaShape.TANH,
    ) -> "QaProfile":
        """
        Profile with the transition lengths tied to the interval width rather than to any grid.

        By default nu = c pi / 4 and sigma = nu / 8, so the partition blends span 3 nu / 4.
        """
        nu = c * math.pi / 4.0 if nu is None else nu
        sigma_small = nu / 8.0 if sigma_small is None else sigma_small
        return cls(eps=eps, c=c, nu=nu, gamma=gamma, sigma_small=sigma_small, shape=QaShape.parse(shape))

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not 0.0 < self.c * self.eps <= 1.0:
            raise ValueError(f"Width parameter must satisfy 0 < c * eps <= 1, got c={self.c}, eps={self.eps}")
        if not 0.0 < self.nu < self.c * math.pi / 2.0:
            raise ValueError(f"Inset nu must lie in (0, c pi / 2), got nu={self.nu}")
        if not 0.0 < self.sigma_small < self.nu / 2.0:
            raise ValueError(f"Partition half-width must lie in (0, nu / 2), got sigma={self.sigma_small}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"Overshoot gamma must lie in (0, 1), got gamma={self.gamma}")

    @property
    def ell(self) -> float:
        return math.pi / self.eps

    @property
    def a(self) -> float:
        return 1.0 - self.c * self.eps

    @property
    def start(self) -> float:
        return self.ell - self.c * math.pi

    @property
    def x0(self) -> float:
        return self.start + self.nu

    @property
    def x1(self) -> float:
        return self.ell - self.nu

    def tanh_profile(self, x):
        """Compressed tanh running from e^pi + gamma at x0 to 1 - gamma at x1; defined on the open interval."""
        x_arr = np.asarray(x, dtype=float)
        midpoint = self.ell - self.c * math.pi / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            argument = (x_arr - midpoint) / ((x_arr - self.x1) * (x_arr - self.x0))
        return (math.exp(math.pi) + 1.0) / 2.0 + ((math.exp(math.pi) - 1.0) / 2.0 + self.gamma) * np.tanh(argument)

    def lower_bound(self) -> float:
        if self.shape == QaShape.RAMP:
            # log q_a = pi (1 - S) - eps c pi (1 - t) on the interval
            return math.exp(-self.eps * self.c * math.pi)
        return min(1.0 - self.gamma, math.exp(math.pi - self.eps * self.c * math.pi))


def _ramp_values(profile: QaProfile, x: np.ndarray) -> np.ndarray:
    progress = (x - profile.start) / (profile.c * math.pi)
    return np.exp(profile.eps * x - math.pi * smooth_step(progress))


def qa_values(profile: QaProfile, x) -> np.ndarray:
    """Evaluate q_a on points of [ell - c pi, ell]."""
    x_arr = np.asarray(x, dtype=float)
    if profile.shape == QaShape.RAMP:
        return _ramp_values(profile, x_arr)
    eps, sigma = profile.eps, profile.sigma_small
    plateau_hi = math.exp(math.pi) + profile.gamma
    plateau_lo = 1.0 - profile.gamma

    left_lo, left_hi = profile.start + sigma, profile.x0 - sigma
    into_plateau = smooth_step((x_arr - left_lo) / (left_hi - left_lo))
    left = (1.0 - into_plateau) * np.exp(eps * x_arr) + into_plateau * plateau_hi

    right_lo, right_hi = profile.x1 + sigma, profile.ell - sigma
    out_of_plateau = smooth_step((x_arr - right_lo) / (right_hi - right_lo))
    right = (1.0 - out_of_plateau) * plateau_lo + out_of_plateau * np.exp(eps * x_arr - math.pi)

    inside = (x_arr > profile.x0) & (x_arr < profile.x1)
    middle = profile.tanh_profile(np.where(inside, x_arr, 0.5 * (profile.x0 + profile.x1)))
    return np.where(x_arr <= profile.x0, left, np.where(x_arr >= profile.x1, right, middle))


def build_qa(profile: QaProfile, x: np.ndarray | None = None, samples: int = 2001) -> tuple[np.ndarray, np.ndarray]:
    """
    Sample the boundary profile q_a on [ell - c pi, ell].

    :param profile: construction parameters
    :param x: sample points; defaults to a uniform grid over the interval
    :param samples: number of uniform samples when x is not given
    :return: sample points and q_a values
    """
    if x is None:
        x = np.linspace(profile.start, profile.ell, samples)
    x = np.asarray(x, dtype=float)
    if np.any(x < profile.start - 1e-12) or np.any(x > profile.ell + 1e-12):
        raise ValueError(f"q_a is defined on [{profile.start}, {profile.ell}] only")
    return x, qa_values(profile, x)


def dirichlet_trace(profile: QaProfile):
    """Boundary trace w(x, 0): e^{eps x} on [0, a ell) and q_a on [a ell, ell], extended ell-periodically."""

    def trace(x):
        x_arr = np.mod(np.asarray(x, dtype=float), profile.ell)
        on_neumann = x_arr >= profile.start
        clipped = np.where(on_neumann, x_arr, profile.start)
        return np.where(on_neumann, qa_values(profile, clipped), np.exp(profile.eps * x_arr))

    return trace
