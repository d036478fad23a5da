"""Blow-up and global-solvability verdicts for both feedback models.

Blow-up side (linear feedback): if ``mu * alpha * int exp(-mu x) p0 >= 1`` for
some ``mu > 0`` the solution cannot live past
``T = 2 / mu^2 * ln(mass / int exp(-mu x) p0)``; the same conclusion (without a
time) follows from ``alpha > 2 * mean(p0)``.

Regular side: if ``p0`` vanishes at 0 and infinity and
``int_0^x (1 - alpha p0) > 0`` for every ``x > 0`` the solution is global.

Log feedback has only a blow-up side: ``mu > 2 beta`` with
``(1 + alpha mu) int exp(-mu x) q0 >= int q0`` gives
``T = 2 / (mu (mu - 2 beta)) * ln(int q0 / int exp(-mu x) q0)``.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import lambertw

from mckv.core.artifacts import format_number
from mckv.core.model import Density, ModelKind, exp_moment, mass, mean, partial_deficit
from mckv.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_MU_GRID = np.logspace(-2.0, 3.0, 64)
FEASIBILITY_TOLERANCE = 1e-9
DEFICIT_MARGIN = 1e-10
DEFICIT_POINTS = 10_000

RECORD_HEADER = "model,alpha,beta,kind,T_bound,witness_mu,witness_x"


class VerdictKind(Enum):
    """Outcome of a criterion check."""

    BLOWUP = "Blowup"
    NO_BLOWUP = "NoBlowup"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Verdict:
    """A criterion outcome with its witness.

    ``T_bound`` is set only for blow-up verdicts and may be ``inf`` when a
    blow-up is certain but no time bound is available. ``margin`` holds the
    smallest deficit found on the regular side.
    """

    kind: VerdictKind
    model: ModelKind = ModelKind.LINEAR
    alpha: float = 0.0
    beta: float = 0.0
    T_bound: float | None = None
    witness_mu: float | None = None
    witness_x: float | None = None
    margin: float | None = None

    def __post_init__(self) -> None:
        if self.kind is VerdictKind.BLOWUP and not (self.T_bound and self.T_bound > 0):
            raise ValueError("Blowup verdicts carry a positive T_bound")
        if self.kind is not VerdictKind.BLOWUP and self.T_bound is not None:
            raise ValueError(f"{self.kind.value} verdicts carry no T_bound")

    def to_record(self) -> str:
        """One CSV line matching ``RECORD_HEADER``."""

        def cell(v: float | None) -> str:
            return "" if v is None else format_number(v)

        return ",".join(
            [
                self.model.value,
                cell(self.alpha),
                cell(self.beta),
                self.kind.value,
                cell(self.T_bound),
                cell(self.witness_mu),
                cell(self.witness_x),
            ]
        )


def _mu_grid(mu_grid: Sequence[float] | np.ndarray | None) -> np.ndarray:
    grid = DEFAULT_MU_GRID if mu_grid is None else np.asarray(mu_grid, dtype=float)
    if grid.size == 0:
        raise ConfigurationError("mu_grid is empty")
    if np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise ConfigurationError("mu_grid entries must be positive and finite")
    return np.unique(grid)


def _feasible_mus(g: Callable[[float], float], grid: np.ndarray) -> list[float]:
    """Grid points with ``g >= 0`` plus refined points between neighbours.

    Sign changes are located with ``brentq`` and interior grid maxima of ``g``
    are polished with a bounded scalar maximisation, so a criterion that holds
    only on a thin interval (or a single point) is still found.
    """
    values = np.array([g(mu) for mu in grid])
    tol = FEASIBILITY_TOLERANCE
    found = [float(mu) for mu, v in zip(grid, values, strict=True) if v >= -tol]

    for i in range(len(grid) - 1):
        a, b = grid[i], grid[i + 1]
        if (values[i] >= 0) != (values[i + 1] >= 0):
            found.append(float(brentq(g, a, b, xtol=1e-14, rtol=1e-13)))

    for i in range(len(grid)):
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if hi <= lo:
            continue
        if values[i] >= values[max(i - 1, 0)] and values[i] >= values[min(i + 1, len(grid) - 1)]:
            res = minimize_scalar(
                lambda mu: -g(mu), bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-12},
            )
            if -res.fun >= -tol:
                found.append(float(res.x))
    return found


def blowup_linear(
    p0: Density,
    alpha: float,
    mu_grid: Sequence[float] | np.ndarray | None = None,
) -> Verdict:
    """Verdict for the linear-feedback equation started from ``p0``.

    Args:
        p0: Initial density.
        alpha: Feedback strength (> 0).
        mu_grid: Positive trial exponents; defaults to 64 log-spaced points in
            [1e-2, 1e3].

    Returns:
        A Blowup verdict with the smallest time bound over feasible ``mu``,
        NoBlowup when the regular-side conditions hold with margin, otherwise
        Indeterminate.

    Raises:
        ConfigurationError: If ``mu_grid`` is empty.
    """
    grid = _mu_grid(mu_grid)
    total = mass(p0)
    base = dict(model=ModelKind.LINEAR, alpha=float(alpha), beta=0.0)

    def g(mu: float) -> float:
        return mu * alpha * exp_moment(p0, mu) - 1.0

    feasible = _feasible_mus(g, grid)
    if feasible:
        times = [2.0 / mu**2 * math.log(total / exp_moment(p0, mu)) for mu in feasible]
        best = int(np.argmin(times))
        logger.debug("Linear blow-up criterion holds at mu=%.6g", feasible[best])
        return Verdict(
            VerdictKind.BLOWUP, T_bound=times[best], witness_mu=feasible[best], **base
        )

    if alpha > 2.0 * mean(p0):
        return Verdict(VerdictKind.BLOWUP, T_bound=math.inf, **base)

    if p0.vanishes_at_ends():
        x_max = 40.0 * p0.scale
        xs = np.linspace(0.0, x_max, DEFICIT_POINTS + 1)[1:]
        deficit = partial_deficit(p0, alpha, xs)
        if np.all(deficit > DEFICIT_MARGIN):
            inner = np.flatnonzero(
                (deficit[1:-1] <= deficit[:-2]) & (deficit[1:-1] <= deficit[2:])
            )
            idx = int(inner[0]) + 1 if inner.size else 0
            return Verdict(
                VerdictKind.NO_BLOWUP,
                witness_x=float(xs[idx]),
                margin=float(deficit[idx]),
                **base,
            )

    return Verdict(VerdictKind.INDETERMINATE, **base)


def blowup_log(
    q0: Density,
    alpha: float,
    beta: float,
    mu_grid: Sequence[float] | np.ndarray | None = None,
) -> Verdict:
    """Blow-up verdict for the log-feedback equation.

    Only ``mu > 2 beta`` entries are tried. There is no regular side, so the
    result is Blowup or Indeterminate.
    """
    grid = _mu_grid(mu_grid)
    grid = grid[grid > 2.0 * beta]
    base = dict(model=ModelKind.LOG, alpha=float(alpha), beta=float(beta))
    if grid.size == 0:
        return Verdict(VerdictKind.INDETERMINATE, **base)

    total = mass(q0)

    def g(mu: float) -> float:
        return ((1.0 + alpha * mu) * exp_moment(q0, mu) - total) / total

    feasible = [mu for mu in _feasible_mus(g, grid) if mu > 2.0 * beta]
    if not feasible:
        return Verdict(VerdictKind.INDETERMINATE, **base)

    times = [
        2.0 / (mu * (mu - 2.0 * beta)) * math.log(total / exp_moment(q0, mu))
        for mu in feasible
    ]
    best = int(np.argmin(times))
    return Verdict(
        VerdictKind.BLOWUP, T_bound=times[best], witness_mu=feasible[best], **base
    )


def delta_verdict(x0: float, alpha: float) -> Verdict:
    """Verdict for a point mass at ``x0``.

    Regular if ``alpha < x0``, blow-up if ``alpha > 2 x0``, undecided between.
    The blow-up time bound comes from the largest ``mu`` with
    ``mu alpha exp(-mu x0) = 1`` (lower Lambert-W branch, k = -1), which gives
    ``T = 2 x0 / mu``; it is infinite when ``alpha <= e x0``.
    """
    if x0 <= 0:
        raise ConfigurationError(f"x0 must be > 0, got {x0}")
    base = dict(model=ModelKind.LINEAR, alpha=float(alpha), beta=0.0)
    if alpha < x0:
        return Verdict(VerdictKind.NO_BLOWUP, witness_x=float(x0), margin=x0 - alpha, **base)
    if alpha > 2.0 * x0:
        arg = -x0 / alpha
        if arg < -1.0 / math.e:
            return Verdict(VerdictKind.BLOWUP, T_bound=math.inf, **base)
        mu = float(-lambertw(arg, k=-1).real / x0)
        return Verdict(VerdictKind.BLOWUP, T_bound=2.0 * x0 / mu, witness_mu=mu, **base)
    return Verdict(VerdictKind.INDETERMINATE, **base)
