"""Implicit-diffusion / explicit-drift stepping shared by both Fokker-Planck solvers.

Both equations have the form ``u_t = u_xx / 2 + a(t) u_x + b(t) u`` on
``[0, x_max]`` with Dirichlet data, where ``a`` and ``b`` depend on a scalar
boundary functional of the new state. Diffusion is backward Euler, drift is
explicit with hybrid differencing: central while ``|a| h <= 1``, upwind by the
sign of ``a`` beyond that.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import solve_banded

from mckv.errors import ConfigurationError

logger = logging.getLogger(__name__)


class Stencil(Enum):
    """Difference used for the drift term."""

    FORWARD = 0
    BACKWARD = 1
    CENTRAL = 2


class Trigger(Enum):
    """Reasons a run stops early."""

    FIXED_POINT = "fixed_point"
    FLUX_OVERFLOW = "flux_overflow"
    JUMP_INDICATOR = "jump_indicator"
    MASS_DROP = "mass_drop"
    PECLET = "peclet"
    STEP_COLLAPSE = "step_collapse"
    LAMBDA_L2 = "lambda_l2"
    SURVIVAL_UNDERFLOW = "survival_underflow"


@dataclass(frozen=True)
class StopEvent:
    """Where and why a run stopped before its final time."""

    time: float
    trigger: Trigger
    step: int

    @property
    def is_blowup(self) -> bool:
        return self.trigger is not Trigger.SURVIVAL_UNDERFLOW


class GridConfig(BaseModel):
    """Spatial/temporal resolution and stopping rules of a solver run.

    ``dt`` is the largest step; the solver shrinks it to
    ``h^2 / (2 (1 + |a| h))`` when the drift is strong.
    """

    model_config = ConfigDict(frozen=True)

    h: float = Field(gt=0)
    dt: float = Field(gt=0)
    x_max: float | None = Field(default=None, gt=0)
    snapshot_times: tuple[float, ...] = ()
    snapshot_pairs: bool = False
    record_every: int = Field(default=1, ge=1)
    fixed_point_tol: float = 1e-10
    fixed_point_max_iter: int = 50
    flux_overflow: float = 1e3
    mass_drop_limit: float = 0.01
    jump_trigger: bool = True
    peclet_cap: float = 2.0
    lambda_l2_cap: float = 10.0
    step_collapse: float = 1e-6

    def check_step_restriction(self) -> None:
        """Reject configurations whose base step breaks ``dt <= h^2 / 2``."""
        limit = 0.5 * self.h * self.h
        if self.dt > limit * (1 + 1e-12):
            raise ConfigurationError(
                f"dt={self.dt:.3g} exceeds the step restriction h^2/2={limit:.3g}"
            )

    def step_for(self, drift: float) -> float:
        """Adaptive step for a drift of magnitude ``|drift|``."""
        return min(self.dt, 0.5 * self.h * self.h / (1.0 + abs(drift) * self.h))


def make_grid(h: float, x_max: float) -> np.ndarray:
    """Uniform nodes ``0, h, ..., x_max`` (``x_max`` rounded to a multiple of h)."""
    n = max(int(round(x_max / h)), 4)
    return np.arange(n + 1) * h


def stencil_for(a: float, h: float) -> Stencil:
    if abs(a) * h <= 1.0:
        return Stencil.CENTRAL
    return Stencil.FORWARD if a > 0 else Stencil.BACKWARD


def drift_differences(u: np.ndarray, h: float) -> np.ndarray:
    """Forward, backward and central first differences at interior nodes.

    Returns an array of shape (n_interior, 3) indexed by ``Stencil`` values.
    """
    out = np.empty((len(u) - 2, 3))
    out[:, Stencil.FORWARD.value] = (u[2:] - u[1:-1]) / h
    out[:, Stencil.BACKWARD.value] = (u[1:-1] - u[:-2]) / h
    out[:, Stencil.CENTRAL.value] = (u[2:] - u[:-2]) / (2 * h)
    return out


def boundary_flux(u: np.ndarray, h: float) -> float:
    """Half the one-sided second-order slope at x = 0, assuming ``u[0] = 0``.

    ``(4 u_1 - u_2) / (4 h)``.
    """
    if len(u) < 3:
        raise ConfigurationError("boundary_flux needs at least 3 nodes")
    return (4.0 * u[1] - u[2]) / (4.0 * h)


@dataclass
class StepColumns:
    """Backward-Euler solves of every right-hand side needed by one step.

    ``state`` is ``A^{-1} u^n`` (plus the right boundary contribution),
    ``drift[:, s]`` is ``A^{-1} D_s u^n`` for each stencil ``s``.
    """

    state: np.ndarray
    boundary: np.ndarray
    drift: np.ndarray


def implicit_columns(
    u: np.ndarray, h: float, dt: float, right_new: float = 0.0
) -> StepColumns:
    """Solve ``(I - dt/2 * delta^2 / h^2) X = RHS`` for all step columns at once.

    Args:
        u: Current full state including both boundary nodes.
        h: Grid spacing.
        dt: Step length.
        right_new: Dirichlet value at ``x_max`` after the step.
    """
    n = len(u) - 2
    r = 0.5 * dt / (h * h)
    ab = np.empty((3, n))
    ab[0, :] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :] = -r

    rhs = np.empty((n, 5))
    rhs[:, 0] = u[1:-1]
    rhs[:, 1] = 0.0
    rhs[-1, 1] = r * right_new
    rhs[:, 2:] = drift_differences(u, h)
    sol = solve_banded((1, 1), ab, rhs, overwrite_ab=True, overwrite_b=True, check_finite=False)
    return StepColumns(state=sol[:, 0], boundary=sol[:, 1], drift=sol[:, 2:])


def interior_flux(v: np.ndarray, h: float) -> float:
    """``boundary_flux`` of a vector of interior values (node 0 implied zero)."""
    return (4.0 * v[0] - v[1]) / (4.0 * h)


def trapezoid_mass(u: np.ndarray, h: float) -> float:
    """Trapezoid integral of a full nodal vector on a uniform grid."""
    return float(h * (u[1:-1].sum() + 0.5 * (u[0] + u[-1])))


def jump_indicator_values(u: np.ndarray, x: np.ndarray, alpha: float) -> float:
    """``sup_x alpha F(x) / x`` with ``F`` the cumulative trapezoid of ``u``."""
    if alpha == 0:
        return 0.0
    h = x[1] - x[0]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (u[1:] + u[:-1]))))
    return float(alpha * np.max(cum[1:] / x[1:]))
