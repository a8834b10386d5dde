import abc
import logging
import math
from enum import Enum
from functools import cache, cached_property, lru_cache

import numpy as np

from databricks.labs.rcn.bounds.ingredients import (
    TABLE_STEP,
    ZetaSigmaTables,
    cumulative_table,
    phi_bump,
    phi_bump_derivatives,
    squeeze_integrand,
    zeta_sigma_tables,
)

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
CIRCLE_BAND = 1e-3
APPROACH_STEPS = (1e-1, 1e-2, 1e-3, 1e-4)
APPROACH_ANGLES = 256
# a ratio that keeps growing tenfold per decade of approach diverges like 1 / |1 - p^2 - q^2|
APPROACH_GROWTH = 3.0
SUBORDINATION_BOX = 5.0  # half-width of the sampled gradient square


class SubordinationError(RuntimeError):
    """The measured subordination ratio does not stay bounded near the unit circle."""


class SigmaVariant(Enum):
    SQUEEZE = "squeeze"
    EXTEND = "extend"

    @classmethod
    def parse(cls, variant: "str | SigmaVariant") -> "SigmaVariant":
        if isinstance(variant, SigmaVariant):
            return variant
        try:
            return cls(variant)
        except ValueError:
            raise ValueError(f"Unknown vector field variant '{variant}', expected squeeze or extend") from None


class SubordinateField(abc.ABC):
    """Vector field Sigma(p, q) evaluated on gradients (p, q) = (theta_x, theta_y)."""

    variant: SigmaVariant

    @abc.abstractmethod
    def sigma(self, p, q) -> tuple[np.ndarray, np.ndarray]:
        """
        Evaluate both components.

        :param p: array of x-derivatives
        :param q: array of y-derivatives, broadcastable against p
        :return: (Sigma_1, Sigma_2) with the broadcast shape
        """

    def partials(self, p, q, step: float = FD_STEP) -> dict[str, np.ndarray]:
        """Centered differences of both components in p and q: keys 1p, 1q, 2p, 2q."""
        p_arr, q_arr = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        right = self.sigma(p_arr + step, q_arr)
        left = self.sigma(p_arr - step, q_arr)
        up = self.sigma(p_arr, q_arr + step)
        down = self.sigma(p_arr, q_arr - step)
        return {
            "1p": (right[0] - left[0]) / (2.0 * step),
            "2p": (right[1] - left[1]) / (2.0 * step),
            "1q": (up[0] - down[0]) / (2.0 * step),
            "2q": (up[1] - down[1]) / (2.0 * step),
        }

    def ratio(self, p, q) -> np.ndarray:
        """(|Sigma_1,p| + |Sigma_1,q + Sigma_2,p| + |Sigma_2,q|) / |1 - p^2 - q^2|."""
        parts = self.partials(p, q)
        numerator = np.abs(parts["1p"]) + np.abs(parts["1q"] + parts["2p"]) + np.abs(parts["2q"])
        return numerator / np.abs(1.0 - np.asarray(p) ** 2 - np.asarray(q) ** 2)

    @cached_property
    def c_sub(self) -> float:
        return subordination_constant(self)


class SqueezeField(SubordinateField):
    """
    Sigma_2 = p phi(b^2 p^2) and Sigma_1 = -int_0^q g(b^2 (1 - s^2)) ds with g(z) = phi(z) + 2 z phi'(z).

    Only the mixed derivative survives, so Sigma_1,p and Sigma_2,q vanish identically. The integral is
    tabulated over the band where g(b^2 (1 - s^2)) is non-zero, with knots 1e-3 apart in z.
    """

    variant = SigmaVariant.SQUEEZE

    def __init__(self, b: float):
        if not b > 0.0 or not math.isfinite(b):
            raise ValueError(f"Squeeze parameter b = (1 - a) / eps must be positive and finite, got {b}")
        self.b = float(b)
        scale = self.b**2
        self._lower = math.sqrt(max(0.0, 1.0 - 2.0 / scale))
        upper = math.sqrt(1.0 + 1.0 / scale)
        step = TABLE_STEP / max(1.0, 2.0 * scale)
        self._table = cumulative_table(lambda s: squeeze_integrand(scale * (1.0 - s**2)), upper, step, self._lower)
        self._end = float(self._table.x[-1])
        logger.debug(f"Squeeze table for b={self.b}: {len(self._table.x)} knots on [{self._lower:.6f}, {upper:.6f}]")

    def sigma(self, p, q) -> tuple[np.ndarray, np.ndarray]:
        p_arr, q_arr = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        clipped = np.clip(np.abs(q_arr), self._lower, self._end)
        first = -np.sign(q_arr) * self._table(clipped)
        second = p_arr * phi_bump(self.b**2 * p_arr**2)
        return first, second


class ExtendField(SubordinateField):
    """
    Sigma = (-V_p, V_q) for the potential

        V(p, q) = phi(p^2) [sigma(q^2) - p^2 zeta(q^2)] - int_0^p (p - s) h(s) ds,
        h(s) = sigma(1 - s^2) d2/ds2 phi(s^2) - zeta(1 - s^2) d2/ds2 (s^2 phi(s^2)),

    differentiated analytically; the p-integral enters through J(p) = int_0^p h and K(p) = int_0^p s h.
    """

    variant = SigmaVariant.EXTEND

    def __init__(self, tables: ZetaSigmaTables):
        self.tables = tables
        edge = math.sqrt(2.0)
        self._j = cumulative_table(self._kernel, edge, TABLE_STEP)
        self._k = cumulative_table(lambda s: s * self._kernel(s), edge, TABLE_STEP)
        self._end = float(self._j.x[-1])

    def _kernel(self, s):
        s_arr = np.asarray(s, dtype=float)
        square = s_arr**2
        value, first, second = phi_bump_derivatives(square)
        curvature = 2.0 * first + 4.0 * square * second
        weighted = 2.0 * value + 10.0 * square * first + 4.0 * square**2 * second
        inner = 1.0 - square
        return self.tables.sigma(inner) * curvature - self.tables.zeta(inner) * weighted

    @property
    def peak(self) -> float:
        """M, the maximum of Sigma_2(0, q), reached at q = 1."""
        return self.tables.peak

    def sigma(self, p, q) -> tuple[np.ndarray, np.ndarray]:
        p_arr, q_arr = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        square = p_arr**2
        value, first, _ = phi_bump_derivatives(square)
        zeta_q = self.tables.zeta_of_q(q_arr)
        sigma_q = self.tables.sigma_of_q(q_arr)
        inner = np.sign(p_arr) * self._j(np.minimum(np.abs(p_arr), self._end))
        sigma_1 = -2.0 * p_arr * first * (sigma_q - square * zeta_q) + 2.0 * p_arr * value * zeta_q + inner
        sigma_2 = value * (self.tables.g0(q_arr) - square * self.tables.f0(q_arr))
        return sigma_1, sigma_2

    def potential(self, p, q) -> np.ndarray:
        p_arr, q_arr = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        square = p_arr**2
        p_abs = np.minimum(np.abs(p_arr), self._end)
        tail = np.abs(p_arr) * self._j(p_abs) - self._k(p_abs)
        value = phi_bump(square)
        return value * (self.tables.sigma_of_q(q_arr) - square * self.tables.zeta_of_q(q_arr)) - tail


@lru_cache(maxsize=16)
def squeeze_field(b: float) -> SqueezeField:
    return SqueezeField(b)


@cache
def extend_field() -> ExtendField:
    return ExtendField(zeta_sigma_tables())


def sigma_squeeze(p, q, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Squeeze vector field for b = (1 - a) / eps, see SqueezeField."""
    return squeeze_field(float(b)).sigma(p, q)


def sigma_extend(p, q) -> tuple[np.ndarray, np.ndarray]:
    """Extension vector field, see ExtendField."""
    return extend_field().sigma(p, q)


def _approach_ratios(field: SubordinateField) -> list[float]:
    angles = np.linspace(0.0, 2.0 * math.pi, APPROACH_ANGLES, endpoint=False)
    ratios = []
    for offset in APPROACH_STEPS:
        radii = np.sqrt(1.0 + np.array([-offset, offset]))
        p = np.multiply.outer(radii, np.cos(angles))
        q = np.multiply.outer(radii, np.sin(angles))
        ratios.append(float(np.max(field.ratio(p, q))))
    return ratios


def subordination_constant(
    field: SubordinateField,
    box: float = SUBORDINATION_BOX,
    samples: int = 161,
) -> float:
    """
    Measure C_sub = max (|Sigma_1,p| + |Sigma_1,q + Sigma_2,p| + |Sigma_2,q|) / |1 - p^2 - q^2|.

    :param field: the vector field
    :param box: half-width of the sampled square [-box, box]^2
    :param samples: samples per axis; points within 1e-3 of the unit circle are left out
    :return: the largest ratio over the box and the circle approach rays
    :raises SubordinationError: when the ratio grows without bound towards the circle
    """
    axis = np.linspace(-box, box, samples)
    p, q = np.meshgrid(axis, axis, indexing="ij")
    keep = np.abs(1.0 - p**2 - q**2) > CIRCLE_BAND
    sampled = float(np.max(field.ratio(p[keep], q[keep])))
    approach = _approach_ratios(field)
    if not all(math.isfinite(value) for value in [sampled, *approach]):
        raise SubordinationError(f"Non-finite subordination ratio for the {field.variant.value} field")
    if approach[-1] > APPROACH_GROWTH * approach[-2] and approach[-1] > sampled:
        raise SubordinationError(
            f"Subordination ratio of the {field.variant.value} field grows towards the unit circle: "
            f"{', '.join(f'{value:.3e}' for value in approach)}"
        )
    constant = max(sampled, *approach)
    logger.debug(f"C_sub of the {field.variant.value} field: {constant:.6e}")
    return constant
