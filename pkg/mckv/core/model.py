"""Domain types, analytic density families and moment utilities."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from typing import Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import simpson
from scipy.special import gammaincinv, log_ndtr, ndtr, ndtri

from mckv.core.artifacts import read_csv, write_csv
from mckv.errors import DomainError, InvalidDensityError, UnboundedMomentError

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-6
DECAY_THRESHOLD = 1e-6


class ModelKind(Enum):
    """Which feedback the dynamics use."""

    LINEAR = "linear"
    LOG = "log"


class ModelParams(BaseModel):
    """Feedback strength, drift and entropy rate of one model instance.

    ``alpha`` may be negative only for the log model. ``kappa`` only enters
    the entropy diagnostics and must lie in (0, 1/8].
    """

    model_config = ConfigDict(frozen=True)

    alpha: float
    beta: float = 0.0
    kappa: float = Field(default=0.125, gt=0.0, le=0.125)
    model: ModelKind = ModelKind.LINEAR

    @model_validator(mode="after")
    def _check_alpha(self) -> "Self":
        if self.model is ModelKind.LINEAR and self.alpha < 0:
            raise ValueError("alpha must be >= 0 for the linear model")
        return self


class DensityKind(Enum):
    """Supported density families on [0, inf)."""

    EXPONENTIAL = "exponential"
    GAMMA2 = "gamma2"
    NARROW_GAUSSIAN = "narrow_gaussian"
    TABULATED = "tabulated"


@dataclass(frozen=True, eq=False)
class Density:
    """A sub-probability density on [0, inf).

    Build instances with the classmethod constructors rather than directly.
    Tabulated densities are piecewise linear between nodes and zero outside
    the grid.

    Example:
        >>> d = Density.gamma_shape2(1.0)
        >>> round(exp_moment(d, 1.0), 12)
        0.25
    """

    kind: DensityKind
    rate: float | None = None
    x0: float | None = None
    sigma: float | None = None
    grid: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "Density":
        if rate <= 0:
            raise InvalidDensityError(f"Exponential rate must be > 0, got {rate}")
        return cls(DensityKind.EXPONENTIAL, rate=float(rate))

    @classmethod
    def gamma_shape2(cls, rate: float = 1.0) -> "Density":
        """rate^2 * x * exp(-rate * x)."""
        if rate <= 0:
            raise InvalidDensityError(f"Gamma rate must be > 0, got {rate}")
        return cls(DensityKind.GAMMA2, rate=float(rate))

    @classmethod
    def narrow_gaussian(cls, x0: float, sigma: float | None = None) -> "Density":
        """Gaussian centred at ``x0`` truncated to x > 0 and renormalized.

        Stands in for a point mass at ``x0``; ``sigma`` defaults to x0/50.
        """
        if x0 <= 0:
            raise InvalidDensityError(f"Gaussian centre must be > 0, got {x0}")
        sigma = x0 / 50.0 if sigma is None else float(sigma)
        if sigma <= 0:
            raise InvalidDensityError(f"Gaussian width must be > 0, got {sigma}")
        return cls(DensityKind.NARROW_GAUSSIAN, x0=float(x0), sigma=sigma)

    @classmethod
    def tabulated(cls, grid: np.ndarray, values: np.ndarray) -> "Density":
        """Piecewise-linear density through ``(grid, values)``.

        Raises:
            InvalidDensityError: On non-finite or negative values, a grid that
                is not strictly increasing, or mass above one.
        """
        x = np.array(grid, dtype=float)
        v = np.array(values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or len(x) < 3:
            raise InvalidDensityError("Tabulated density needs matching 1-D arrays")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise InvalidDensityError("Tabulated density has non-finite entries")
        if x[0] < 0 or np.any(np.diff(x) <= 0):
            raise InvalidDensityError("Tabulated grid must be increasing from >= 0")
        if np.any(v < 0):
            raise InvalidDensityError("Tabulated density has negative values")
        x.setflags(write=False)
        v.setflags(write=False)
        density = cls(DensityKind.TABULATED, grid=x, values=v)
        if mass(density) > 1 + MASS_TOLERANCE:
            raise InvalidDensityError(f"Tabulated mass {mass(density):.6g} exceeds 1")
        return density

    @classmethod
    def from_csv(cls, path: Path | str) -> "Density":
        """Load a tabulated density from a two-column ``x,density`` CSV."""
        header, data = read_csv(path)
        if header != ["x", "density"]:
            raise InvalidDensityError(f"Expected header 'x,density', got {header}")
        return cls.tabulated(data[:, 0], data[:, 1])

    def to_csv(self, path: Path | str, grid: np.ndarray | None = None) -> Path:
        """Write the density sampled on ``grid`` (its own grid if tabulated)."""
        if grid is None:
            if self.grid is None:
                raise ValueError("A grid is required for analytic densities")
            grid = self.grid
        return write_csv(path, ["x", "density"], [grid, self.pdf(grid)])

    @property
    def scale(self) -> float:
        """Characteristic length used for default truncation."""
        match self.kind:
            case DensityKind.EXPONENTIAL | DensityKind.GAMMA2:
                return 1.0 / self.rate
            case DensityKind.NARROW_GAUSSIAN:
                return max(self.x0, self.sigma)
            case DensityKind.TABULATED:
                return float(self.grid[-1]) / 40.0

    @property
    def _gauss_norm(self) -> float:
        return float(ndtr(self.x0 / self.sigma))

    def pdf(self, x: np.ndarray | float) -> np.ndarray:
        """Density values at ``x`` (zero for x < 0)."""
        x = np.asarray(x, dtype=float)
        pos = x >= 0
        xp = np.where(pos, x, 0.0)
        match self.kind:
            case DensityKind.EXPONENTIAL:
                out = self.rate * np.exp(-self.rate * xp)
            case DensityKind.GAMMA2:
                out = self.rate**2 * xp * np.exp(-self.rate * xp)
            case DensityKind.NARROW_GAUSSIAN:
                z = (xp - self.x0) / self.sigma
                out = np.exp(-0.5 * z**2) / (
                    self.sigma * np.sqrt(2 * np.pi) * self._gauss_norm
                )
            case DensityKind.TABULATED:
                out = np.interp(xp, self.grid, self.values, left=0.0, right=0.0)
        return np.where(pos, out, 0.0)

    def cdf(self, x: np.ndarray | float) -> np.ndarray:
        """Mass in (0, x)."""
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        match self.kind:
            case DensityKind.EXPONENTIAL:
                return -np.expm1(-self.rate * x)
            case DensityKind.GAMMA2:
                rx = self.rate * x
                return -np.expm1(-rx) - rx * np.exp(-rx)
            case DensityKind.NARROW_GAUSSIAN:
                lo = ndtr(-self.x0 / self.sigma)
                return (ndtr((x - self.x0) / self.sigma) - lo) / self._gauss_norm
            case DensityKind.TABULATED:
                return self._tabulated_cdf(x)

    def _tabulated_cdf(self, x: np.ndarray) -> np.ndarray:
        g, v = self.grid, self.values
        nodes = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(g) * (v[1:] + v[:-1]))))
        xc = np.clip(x, g[0], g[-1])
        idx = np.clip(np.searchsorted(g, xc, side="right") - 1, 0, len(g) - 2)
        vx = np.interp(xc, g, v)
        return nodes[idx] + 0.5 * (xc - g[idx]) * (v[idx] + vx)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Quantile function of the normalized density, for u in [0, 1)."""
        u = np.asarray(u, dtype=float)
        match self.kind:
            case DensityKind.EXPONENTIAL:
                return -np.log1p(-u) / self.rate
            case DensityKind.GAMMA2:
                return gammaincinv(2.0, u) / self.rate
            case DensityKind.NARROW_GAUSSIAN:
                lo = ndtr(-self.x0 / self.sigma)
                return self.x0 + self.sigma * ndtri(lo + u * (1.0 - lo))
            case DensityKind.TABULATED:
                g = self.grid
                nodes = self._tabulated_cdf(g)
                return np.interp(u * nodes[-1], nodes, g)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.ppf(rng.random(size))

    def vanishes_at_ends(self) -> bool:
        """Whether the density tends to zero at 0 and at infinity.

        Decided from the family for analytic kinds and from endpoint values
        below ``DECAY_THRESHOLD`` for tabulated data.
        """
        match self.kind:
            case DensityKind.EXPONENTIAL:
                return False
            case DensityKind.GAMMA2:
                return True
            case DensityKind.NARROW_GAUSSIAN:
                return float(self.pdf(0.0)) < DECAY_THRESHOLD
            case DensityKind.TABULATED:
                return bool(
                    self.values[0] < DECAY_THRESHOLD and self.values[-1] < DECAY_THRESHOLD
                )


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Values recorded at strictly increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError(
                f"times and values differ in shape: {times.shape} vs {values.shape}"
            )
        if np.any(np.diff(times) <= 0):
            raise ValueError("TimeSeries times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.times)

    def at(self, t: np.ndarray | float) -> np.ndarray:
        """Linear interpolation of the series at ``t``."""
        return np.interp(t, self.times, self.values)

    def window(self, t_lo: float, t_hi: float) -> "TimeSeries":
        keep = (self.times >= t_lo) & (self.times <= t_hi)
        return TimeSeries(self.times[keep], self.values[keep])

    @property
    def final(self) -> float:
        return float(self.values[-1])


def _check_tabulated(d: Density) -> None:
    if d.kind is DensityKind.TABULATED and not np.all(np.isfinite(d.values)):
        raise InvalidDensityError("Tabulated density has non-finite values")


def mass(d: Density) -> float:
    """Total mass; closed form for analytic kinds, Simpson for tabulated."""
    _check_tabulated(d)
    if d.kind is DensityKind.TABULATED:
        return float(simpson(d.values, x=d.grid))
    return 1.0


def exp_moment(d: Density, mu: float) -> float:
    """Laplace transform ``int exp(-mu x) d(x) dx``.

    Raises:
        DomainError: If ``mu < 0``.
    """
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu}")
    _check_tabulated(d)
    match d.kind:
        case DensityKind.EXPONENTIAL:
            return d.rate / (d.rate + mu)
        case DensityKind.GAMMA2:
            return (d.rate / (d.rate + mu)) ** 2
        case DensityKind.NARROW_GAUSSIAN:
            # exp(-mu x0 + mu^2 s^2 / 2) Phi((x0 - mu s^2)/s) / Phi(x0/s), in logs
            s = d.sigma
            log_val = (
                -mu * d.x0
                + 0.5 * (mu * s) ** 2
                + log_ndtr((d.x0 - mu * s**2) / s)
                - log_ndtr(d.x0 / s)
            )
            return float(np.exp(log_val))
        case DensityKind.TABULATED:
            return float(simpson(np.exp(-mu * d.grid) * d.values, x=d.grid))


def mean(d: Density) -> float:
    """First moment ``int x d(x) dx``.

    Raises:
        UnboundedMomentError: If a tabulated density is still heavy at the end
            of its grid.
    """
    _check_tabulated(d)
    match d.kind:
        case DensityKind.EXPONENTIAL:
            return 1.0 / d.rate
        case DensityKind.GAMMA2:
            return 2.0 / d.rate
        case DensityKind.NARROW_GAUSSIAN:
            a = d.x0 / d.sigma
            hazard = np.exp(-0.5 * a**2) / (np.sqrt(2 * np.pi) * d._gauss_norm)
            return d.x0 + d.sigma * float(hazard)
        case DensityKind.TABULATED:
            g, v = d.grid, d.values
            first = float(simpson(g * v, x=g))
            # mass the tail would carry if the last value persisted one more span
            tail = g[-1] * v[-1] * (g[-1] - g[0])
            if tail > 1e-3 * max(first, np.finfo(float).tiny):
                raise UnboundedMomentError(
                    f"Tabulated density does not decay: tail estimate {tail:.3g}"
                )
            return first


def partial_deficit(d: Density, alpha: float, x: float | np.ndarray) -> float | np.ndarray:
    """``int_0^x (1 - alpha d(y)) dy`` for one point or an array of points."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise DomainError("partial_deficit needs x >= 0")
    _check_tabulated(d)
    out = x_arr - alpha * d.cdf(x_arr)
    return float(out) if out.ndim == 0 else out
