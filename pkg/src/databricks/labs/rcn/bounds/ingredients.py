import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass
from functools import cache, cached_property

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicHermiteSpline

logger = logging.getLogger(__name__)

QUAD_TOL = 1e-10
TABLE_STEP = 1e-3
# below this the bump is zero to double precision, exp(-1/D) < 1e-200
_LIVE_DENOMINATOR = 2e-3


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


def integrate(func: Callable[[float], float], lower: float, upper: float) -> float:
    """
    Adaptive Gauss-Kronrod quadrature with absolute and relative tolerance 1e-10.

    :raises QuadratureError: when scipy reports an IntegrationWarning
    """
    with warnings.catch_warnings(record=True) as messages:
        warnings.simplefilter("always", category=IntegrationWarning)
        value, _ = quad(lambda t: float(func(t)), lower, upper, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    for message in messages:
        if issubclass(message.category, IntegrationWarning):
            raise QuadratureError(f"Quadrature over [{lower}, {upper}] failed: {message.message}")
    return float(value)


def cumulative_table(integrand: Callable, upper: float, step: float, lower: float = 0.0) -> CubicHermiteSpline:
    """
    Tabulate t -> int_lower^t integrand on a uniform grid, interpolated with the integrand as exact slope.

    :param integrand: vectorized integrand
    :param upper: end of the table
    :param step: knot spacing; the last knot is moved up to keep the spacing uniform
    :param lower: start of the table, where the table vanishes
    """
    count = max(1, math.ceil((upper - lower) / step - 1e-9))
    knots = lower + step * np.arange(count + 1)
    increments = [integrate(integrand, lo, hi) for lo, hi in zip(knots[:-1], knots[1:])]
    values = np.concatenate([[0.0], np.cumsum(increments)])
    return CubicHermiteSpline(knots, values, np.asarray(integrand(knots), dtype=float))


def _as_output(template, values: np.ndarray):
    return float(values) if np.ndim(template) == 0 else values


def phi_bump_derivatives(p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values, first and second derivatives of the bump exp[1/2 - 1/((2 - p)(p + 1)) - p/4] on (-1, 2)."""
    p_arr = np.asarray(p, dtype=float)
    safe = np.where((p_arr > -1.0) & (p_arr < 2.0), p_arr, 0.5)
    denominator = (2.0 - safe) * (safe + 1.0)
    live = (p_arr > -1.0) & (p_arr < 2.0) & (denominator > _LIVE_DENOMINATOR)
    denominator = np.where(live, denominator, 1.0)
    slope = 1.0 - 2.0 * safe
    first_log = slope / denominator**2 - 0.25
    second_log = -2.0 * (denominator + slope**2) / denominator**3
    value = np.where(live, np.exp(0.5 - 1.0 / denominator - safe / 4.0), 0.0)
    first = np.where(live, value * first_log, 0.0)
    second = np.where(live, value * (second_log + first_log**2), 0.0)
    return value, first, second


def phi_bump(p):
    """
    Compactly supported bump with phi(0) = 1, phi(1) = exp(-1/4) and p * phi(p^2) peaking at p = 1.

    :param p: scalar or array
    :return: exp[1/2 - 1/((2 - p)(p + 1)) - p/4] on (-1, 2), 0 elsewhere
    """
    return _as_output(p, phi_bump_derivatives(p)[0])


def phi_bump_prime(p):
    return _as_output(p, phi_bump_derivatives(p)[1])


def squeeze_integrand(z):
    """phi(z) + 2 z phi'(z), the q-derivative of the squeeze field's first component up to sign."""
    value, first, _ = phi_bump_derivatives(z)
    return _as_output(z, value + 2.0 * np.asarray(z, dtype=float) * first)


def squeeze_integrand_slope(z):
    """Derivative 3 phi'(z) + 2 z phi''(z) of squeeze_integrand."""
    _, first, second = phi_bump_derivatives(z)
    return _as_output(z, 3.0 * first + 2.0 * np.asarray(z, dtype=float) * second)


@dataclass(frozen=True)
class PsiProfile:
    """psi(x) = chi(x / scale) with chi the bump, scaled so that int_0^inf (1 - s^2) psi(s^2) ds = 0."""

    scale: float  # eta^2 = A0 / A1
    moment0: float  # A0 = int_0^inf chi(s^2) ds
    moment1: float  # A1 = int_0^inf s^2 chi(s^2) ds

    def __call__(self, x):
        return phi_bump(np.asarray(x, dtype=float) / self.scale)

    def derivative(self, x):
        return phi_bump_prime(np.asarray(x, dtype=float) / self.scale) / self.scale

    @property
    def support(self) -> float:
        """psi vanishes for x >= 2 * scale."""
        return 2.0 * self.scale

    @property
    def slope_at_zero(self) -> float:
        return float(self.derivative(0.0))

    def zero_moment_residual(self) -> float:
        """int_0^inf (1 - s^2) psi(s^2) ds, zero by construction."""
        return integrate(lambda s: (1.0 - s**2) * self(s**2), 0.0, math.sqrt(self.support))


@cache
def build_psi() -> PsiProfile:
    """
    Rescale the bump so that its weighted moment int_0^inf (1 - s^2) psi(s^2) ds vanishes.

    :return: the profile with its moments A0, A1 > 0 and the scale eta^2 = A0 / A1
    """
    edge = math.sqrt(2.0)
    moment0 = integrate(lambda s: phi_bump(s**2), 0.0, edge)
    moment1 = integrate(lambda s: s**2 * phi_bump(s**2), 0.0, edge)
    if moment0 <= 0.0 or moment1 <= 0.0:
        raise QuadratureError(f"Bump moments must be positive, got A0={moment0}, A1={moment1}")
    profile = PsiProfile(scale=moment0 / moment1, moment0=moment0, moment1=moment1)
    logger.debug(f"psi built: A0={moment0:.12f}, A1={moment1:.12f}, scale={profile.scale:.12f}")
    return profile


def _blend_coefficients(slope: float, curvature: float) -> tuple[float, float, float]:
    # t^3 (c0 + c1 t + c2 t^2) on t = s + 1 in [0, 1], flat to second order at t = 0, matching at t = 1
    top = (curvature - 6.0 * slope) / 2.0
    middle = slope - 2.0 * top
    return -middle - top, middle, top


def _blend(s: np.ndarray, coefficients: tuple[float, float, float]) -> np.ndarray:
    t = s + 1.0
    c0, c1, c2 = coefficients
    return t**3 * (c0 + c1 * t + c2 * t**2)


class ZetaSigmaTables:
    """
    The functions zeta(q^2) = int_0^q (q - s) psi(s^2) ds and sigma(q^2) = int_0^q (q - s)(1 - s^2) psi(s^2) ds.

    Both are tabulated through the first moments F0 = int psi, F1 = int s psi, G0 = int (1 - s^2) psi and
    G1 = int s (1 - s^2) psi, so that zeta(q^2) = q F0(q) - F1(q). Beyond the support of psi the moments are
    constant. On [-1, 0) the functions continue as quintic blends that vanish to second order at -1.
    """

    def __init__(self, psi: PsiProfile, step: float = TABLE_STEP):
        self.psi = psi
        self.q_max = math.sqrt(psi.support)
        self._f0 = cumulative_table(lambda s: psi(s**2), self.q_max, step)
        self._f1 = cumulative_table(lambda s: s * psi(s**2), self.q_max, step)
        self._g0 = cumulative_table(lambda s: (1.0 - s**2) * psi(s**2), self.q_max, step)
        self._g1 = cumulative_table(lambda s: s * (1.0 - s**2) * psi(s**2), self.q_max, step)
        self._end = float(self._f0.x[-1])
        slope_at_zero = psi.slope_at_zero
        self._zeta_blend = _blend_coefficients(0.5, slope_at_zero / 6.0)
        self._sigma_blend = _blend_coefficients(0.5, (slope_at_zero - 1.0) / 6.0)

    def _moment(self, table: CubicHermiteSpline, q) -> np.ndarray:
        q_arr = np.abs(np.asarray(q, dtype=float))
        return table(np.minimum(q_arr, self._end))

    def f0(self, q):
        """int_0^q psi(s^2) ds, odd in q."""
        return _as_output(q, np.sign(q) * self._moment(self._f0, q))

    def g0(self, q):
        """int_0^q (1 - s^2) psi(s^2) ds, odd in q."""
        return _as_output(q, np.sign(q) * self._moment(self._g0, q))

    def zeta_of_q(self, q):
        q_abs = np.abs(np.asarray(q, dtype=float))
        return _as_output(q, q_abs * self._moment(self._f0, q_abs) - self._moment(self._f1, q_abs))

    def sigma_of_q(self, q):
        q_abs = np.abs(np.asarray(q, dtype=float))
        return _as_output(q, q_abs * self._moment(self._g0, q_abs) - self._moment(self._g1, q_abs))

    def _extended(self, s, of_q: Callable, blend: tuple[float, float, float]):
        s_arr = np.asarray(s, dtype=float)
        positive = of_q(np.sqrt(np.maximum(s_arr, 0.0)))
        blended = _blend(np.clip(s_arr, -1.0, 0.0), blend)
        values = np.where(s_arr >= 0.0, positive, np.where(s_arr > -1.0, blended, 0.0))
        return _as_output(s, values)

    def zeta(self, s):
        """zeta on the whole line, supported in [-1, inf)."""
        return self._extended(s, self.zeta_of_q, self._zeta_blend)

    def sigma(self, s):
        """sigma on the whole line, supported in [-1, inf)."""
        return self._extended(s, self.sigma_of_q, self._sigma_blend)

    @cached_property
    def peak(self) -> float:
        """M = int_0^1 (1 - s^2) psi(s^2) ds, the maximum of g0."""
        return integrate(lambda s: (1.0 - s**2) * self.psi(s**2), 0.0, 1.0)


@cache
def zeta_sigma_tables() -> ZetaSigmaTables:
    tables = ZetaSigmaTables(build_psi())
    logger.debug(f"zeta/sigma tables built on [0, {tables.q_max:.6f}]")
    return tables
