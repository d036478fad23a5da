"""Exact self-similar solutions of the supercooled Stefan problem.

The profile ``U(t, x; c, beta)`` solves ``U_t = U_xx / 2`` to the right of the
moving boundary ``x = alpha * S(t)`` with ``S(t) = (c + beta * sqrt(2t)) / alpha``,
vanishes on the boundary and satisfies ``S' = U_x / 2`` there.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.special import erfcx

from mckv.errors import DomainError

QUAD_EPSABS = 1e-12


@dataclass(frozen=True)
class SelfSimilar:
    """Parameters of one self-similar pair (offset, rate, feedback)."""

    c: float
    beta: float
    alpha: float

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if self.alpha <= 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha}")


class ProfileValue(NamedTuple):
    """Profile value with a flag for points left of the free boundary."""

    value: float
    below_boundary: bool


def beta_inf(beta: float) -> float:
    """Far-field value ``alpha * U(t, inf)`` as a function of ``beta``.

    Evaluated as ``int_0^inf exp(-z - z^2 / (4 beta^2)) dz``, which equals
    ``2 beta exp(beta^2) int_beta^inf exp(-z^2) dz`` without overflowing.

    Raises:
        DomainError: If ``beta <= 0``.
    """
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    inv = 1.0 / (4.0 * beta * beta)
    value, _ = quad(
        lambda z: math.exp(-z - z * z * inv),
        0.0,
        math.inf,
        epsabs=QUAD_EPSABS,
        epsrel=1e-12,
        limit=200,
    )
    return value


def S_eval(ss: SelfSimilar, t: float) -> float:
    """Free boundary ``S(t) = (c + beta sqrt(2t)) / alpha``."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return (ss.c + ss.beta * math.sqrt(2.0 * t)) / ss.alpha


def U_eval(ss: SelfSimilar, t: float, x: float) -> ProfileValue:
    """Profile value by adaptive quadrature.

    For ``t <= 0`` the step profile is returned: ``beta_inf / alpha`` right of
    ``c`` and zero elsewhere. Points left of the boundary are clamped to zero
    and flagged.
    """
    if t <= 0:
        if x > ss.c:
            return ProfileValue(beta_inf(ss.beta) / ss.alpha, False)
        return ProfileValue(0.0, x < ss.c)

    w = (x - ss.c) / math.sqrt(2.0 * t)
    if w < ss.beta:
        return ProfileValue(0.0, True)

    # substitute z = beta + y so that exp(beta^2) never appears on its own
    b = ss.beta
    integral, _ = quad(
        lambda y: math.exp(-y * y - 2.0 * b * y),
        0.0,
        w - b,
        epsabs=QUAD_EPSABS,
        epsrel=1e-12,
        limit=200,
    )
    return ProfileValue(2.0 * b * integral / ss.alpha, False)


def U_profile(ss: SelfSimilar, t: float, x: np.ndarray) -> np.ndarray:
    """Vectorized profile through ``erfcx``; zero left of the boundary.

    Uses ``exp(b^2) (erfc(b) - erfc(w)) = erfcx(b) - exp(b^2 - w^2) erfcx(w)``,
    which is stable for ``w >= b``.
    """
    if t <= 0:
        raise DomainError(f"U_profile needs t > 0, got {t}")
    b = ss.beta
    w = (np.asarray(x, dtype=float) - ss.c) / math.sqrt(2.0 * t)
    wc = np.maximum(w, b)
    inner = erfcx(b) - np.exp(b * b - wc * wc) * erfcx(wc)
    value = b * math.sqrt(math.pi) * inner / ss.alpha
    return np.where(w >= b, value, 0.0)


def U_x_profile(ss: SelfSimilar, t: float, x: np.ndarray) -> np.ndarray:
    """Spatial derivative of the profile right of the boundary."""
    b = ss.beta
    w = (np.asarray(x, dtype=float) - ss.c) / math.sqrt(2.0 * t)
    deriv = 2.0 * b * np.exp(b * b - w * w) / (ss.alpha * math.sqrt(2.0 * t))
    return np.where(w >= b, deriv, 0.0)


def selfsim_residual(
    ss: SelfSimilar,
    grid: np.ndarray,
    t_window: tuple[float, float],
    dt: float | None = None,
    n_times: int = 5,
) -> float:
    """Finite-difference defect of the closed form on ``grid`` over ``t_window``.

    Returns the largest ``|U_t - U_xx / 2|`` at interior grid nodes plus the
    largest boundary mismatch ``|S' - U_x / 2|`` with ``U_x`` taken from a
    one-sided second-order stencil.

    Args:
        ss: The self-similar pair.
        grid: Uniform spatial nodes strictly right of the boundary.
        t_window: Closed interval of times at which the defect is sampled.
        dt: Time step of the central time difference (defaults to h^2).
        n_times: Number of sample times in the window.

    Raises:
        DomainError: If the grid reaches the boundary during the window.
    """
    x = np.asarray(grid, dtype=float)
    t_lo, t_hi = t_window
    if t_lo <= 0 or t_hi < t_lo:
        raise DomainError(f"Invalid time window {t_window}")
    if len(x) < 3:
        raise DomainError("Residual grid needs at least 3 nodes")
    h = float(x[1] - x[0])
    if dt is None:
        dt = h * h
    if x[0] <= ss.alpha * S_eval(ss, t_hi + dt):
        raise DomainError("Residual grid touches the free boundary")

    worst = 0.0
    for t in np.linspace(t_lo, t_hi, n_times):
        u_t = (U_profile(ss, t + dt, x) - U_profile(ss, t - dt, x)) / (2 * dt)
        u = U_profile(ss, t, x)
        u_xx = (u[2:] - 2 * u[1:-1] + u[:-2]) / (h * h)
        interior = np.max(np.abs(u_t[1:-1] - 0.5 * u_xx))

        xb = ss.alpha * S_eval(ss, t)
        ub = U_profile(ss, t, np.array([xb, xb + h, xb + 2 * h]))
        slope = (-3 * ub[0] + 4 * ub[1] - ub[2]) / (2 * h)
        speed = ss.beta / (ss.alpha * math.sqrt(2.0 * t))
        worst = max(worst, float(interior) + abs(speed - 0.5 * slope))
    return worst


@dataclass(frozen=True)
class SelfSimilarStart:
    """Initial and boundary data that reproduce a self-similar pair in p-coordinates.

    The run starts at profile time ``t0``; solver time ``t`` corresponds to
    profile time ``t0 + t`` and ``p(t, y) = U(t0 + t, y + alpha S(t0 + t))``.
    """

    profile: SelfSimilar
    t0: float

    def __post_init__(self) -> None:
        if self.t0 <= 0:
            raise DomainError(f"t0 must be > 0, got {self.t0}")

    def _shift(self, t: float) -> float:
        return self.profile.alpha * S_eval(self.profile, self.t0 + t)

    def initial(self, y: np.ndarray) -> np.ndarray:
        return U_profile(self.profile, self.t0, np.asarray(y) + self._shift(0.0))

    def right_value(self, t: float, y_max: float) -> float:
        return float(U_profile(self.profile, self.t0 + t, np.array([y_max + self._shift(t)]))[0])

    def exact_loss(self, t: np.ndarray | float) -> np.ndarray:
        """Loss ``s(t) = S(t0 + t) - S(t0)``."""
        ss = self.profile
        t = np.asarray(t, dtype=float)
        return ss.beta * (np.sqrt(2.0 * (self.t0 + t)) - math.sqrt(2.0 * self.t0)) / ss.alpha

    @property
    def scale(self) -> float:
        return math.sqrt(2.0 * self.t0)
