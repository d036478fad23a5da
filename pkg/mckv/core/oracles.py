"""Closed-form Brownian first-passage oracles.

All formulas are for ``X = x0 + beta t + B`` absorbed at zero, with ``B`` a
standard Brownian motion (generator ``u_xx / 2``).
"""

from collections.abc import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.special import ndtr

from mckv.core.model import Density, DensityKind

_NODES = 4001


def first_passage_density(t: np.ndarray | float, x0: float) -> np.ndarray:
    """Hitting-time density ``x0 (2 pi t^3)^(-1/2) exp(-x0^2 / (2t))``."""
    t = np.asarray(t, dtype=float)
    return x0 / np.sqrt(2 * np.pi * t**3) * np.exp(-(x0**2) / (2 * t))


def first_passage_cdf(t: np.ndarray | float, x0: float) -> np.ndarray:
    """Probability of having hit zero by ``t``: ``2 Phi(-x0 / sqrt(t))``."""
    t = np.asarray(t, dtype=float)
    return 2.0 * ndtr(-x0 / np.sqrt(t))


def drifted_survival(t: np.ndarray | float, x0: float, beta: float) -> np.ndarray:
    """Survival probability with drift ``beta``.

    ``Phi((x0 + beta t)/sqrt t) - exp(-2 beta x0) Phi((beta t - x0)/sqrt t)``.
    """
    t = np.asarray(t, dtype=float)
    rt = np.sqrt(t)
    return ndtr((x0 + beta * t) / rt) - np.exp(-2 * beta * x0) * ndtr(
        (beta * t - x0) / rt
    )


def _support(d: Density) -> tuple[float, float]:
    match d.kind:
        case DensityKind.NARROW_GAUSSIAN:
            return max(0.0, d.x0 - 12 * d.sigma), d.x0 + 12 * d.sigma
        case DensityKind.TABULATED:
            return float(d.grid[0]), float(d.grid[-1])
        case _:
            return 0.0, 60.0 * d.scale


def _average(d: Density, kernel: Callable[[np.ndarray], np.ndarray]) -> float:
    lo, hi = _support(d)
    x0 = np.linspace(lo, hi, _NODES)
    return float(simpson(d.pdf(x0) * kernel(x0), x=x0))


def averaged_first_passage_density(d: Density, t: np.ndarray | float) -> np.ndarray:
    """Hitting-time density for a starting point drawn from ``d``."""
    times = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array(
        [_average(d, lambda x0, s=s: first_passage_density(s, x0)) for s in times]
    )
    return out if np.ndim(t) else float(out[0])


def averaged_loss(d: Density, t: np.ndarray | float) -> np.ndarray:
    """Probability of having hit zero by ``t`` for a start drawn from ``d``."""
    times = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array(
        [_average(d, lambda x0, s=s: first_passage_cdf(s, x0)) for s in times]
    )
    return out if np.ndim(t) else float(out[0])


def averaged_survival(d: Density, t: np.ndarray | float, beta: float) -> np.ndarray:
    """Survival probability with drift for a start drawn from ``d``."""
    times = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array(
        [_average(d, lambda x0, s=s: drifted_survival(s, x0, beta)) for s in times]
    )
    return out if np.ndim(t) else float(out[0])
