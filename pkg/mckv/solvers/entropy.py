"""Stationary profile, bump function and weighted entropy functionals for the log model."""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from mckv.errors import DomainError


class BumpDerivatives(NamedTuple):
    """``phi`` and its first three derivatives."""

    phi: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray


def phi_bump(x: np.ndarray | float) -> np.ndarray:
    """``exp(-1 / (1 - x^2))`` on [0, 1), zero from 1 on."""
    return phi_derivatives(x).phi


def phi_derivatives(x: np.ndarray | float) -> BumpDerivatives:
    """Closed-form derivatives of the bump via ``phi = exp(g)``, ``g = -1/(1 - x^2)``.

    ``phi' = phi g'``, ``phi'' = phi (g'^2 + g'')`` and
    ``phi''' = phi (g'^3 + 3 g' g'' + g''')``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("phi_bump is defined for x >= 0")
    inside = x < 1.0
    xi = np.where(inside, x, 0.0)
    u = 1.0 - xi * xi
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        phi = np.where(inside, np.exp(-1.0 / u), 0.0)
        live = phi > 0
        g1 = -2.0 * xi / u**2
        g2 = -2.0 / u**2 - 8.0 * xi**2 / u**3
        g3 = -24.0 * xi / u**3 - 48.0 * xi**3 / u**4
        d1 = np.where(live, phi * g1, 0.0)
        d2 = np.where(live, phi * (g1**2 + g2), 0.0)
        d3 = np.where(live, phi * (g1**3 + 3 * g1 * g2 + g3), 0.0)
    return BumpDerivatives(phi, d1, d2, d3)


def phi_inflection() -> float:
    """Root of ``phi''`` in (0, 1), located by bracketing."""
    return float(brentq(lambda s: float(phi_derivatives(s).d2), 0.1, 0.99, xtol=1e-14))


@dataclass(frozen=True)
class EntropyKit:
    """Stationary profile ``omega(x) = 2 kappa x exp(-sqrt(2 kappa) x)`` and the bump weight.

    ``omega`` solves ``omega''/2 + sqrt(2 kappa) omega' + kappa omega = 0`` with
    unit mass and ``omega'(0) = 2 kappa``.
    """

    kappa: float = 0.125

    def __post_init__(self) -> None:
        if not 0.0 < self.kappa <= 0.125:
            raise DomainError(f"kappa must lie in (0, 1/8], got {self.kappa}")

    @property
    def rate(self) -> float:
        return math.sqrt(2.0 * self.kappa)

    @property
    def omega_slope_at_zero(self) -> float:
        return 2.0 * self.kappa

    def omega(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * self.kappa * x * np.exp(-self.rate * x)

    def phi(self, x: np.ndarray) -> np.ndarray:
        return phi_bump(x)

    def ratio(self, r: np.ndarray, x: np.ndarray, lam: float) -> np.ndarray:
        """``h = r / omega`` with the limit ``-lambda / kappa`` at the origin."""
        h = np.empty_like(r)
        h[1:] = r[1:] / self.omega(x[1:])
        h[0] = -lam / self.kappa
        return h

    def functionals(self, r: np.ndarray, x: np.ndarray, lam: float) -> tuple[float, float]:
        """``(I, J) = (int h^2 omega phi, int h_x^2 omega phi)`` over [0, 1].

        ``x`` must be uniform and start at zero; nodes right of 1 carry no weight.
        """
        keep = x <= 1.0 + 1e-12
        xs = x[keep]
        h = self.ratio(r[keep], xs, lam)
        weight = self.omega(xs) * phi_bump(xs)
        h_x = np.gradient(h, xs)
        return float(simpson(h * h * weight, x=xs)), float(simpson(h_x * h_x * weight, x=xs))

    def reference_level(self, x: np.ndarray) -> float:
        """``int omega phi`` on the same nodes, the value of ``I`` for ``h = 1``."""
        keep = x <= 1.0 + 1e-12
        xs = x[keep]
        return float(simpson(self.omega(xs) * phi_bump(xs), x=xs))
