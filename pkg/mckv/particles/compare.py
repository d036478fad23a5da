"""Sup-distance comparison between a particle series and a PDE series."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from mckv.core.model import TimeSeries
from mckv.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComparisonReport:
    """Result of ``compare_to_pde``."""

    sup_distance: float
    tolerance: float
    passed: bool
    window: tuple[float, float]
    argmax_time: float

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{verdict}: sup distance {self.sup_distance:.3e} "
            f"(tolerance {self.tolerance:.3e}) on [{self.window[0]:.4g}, {self.window[1]:.4g}]"
        )


def comparison_tolerance(n: int | None, h: float | None, dt: float | None, calibration: float = 1.0) -> float:
    """``3 max(n^-1/2, h, sqrt(dt)) * calibration``; missing resolutions are ignored."""
    scales = [0.0]
    if n:
        scales.append(1.0 / math.sqrt(n))
    if h:
        scales.append(h)
    if dt:
        scales.append(math.sqrt(dt))
    return 3.0 * max(scales) * calibration


def compare_to_pde(
    empirical: TimeSeries,
    pde: TimeSeries,
    *,
    n: int | None = None,
    h: float | None = None,
    dt: float | None = None,
    calibration: float = 1.0,
) -> ComparisonReport:
    """Linear-interpolated sup distance on the overlap of the two windows.

    Both series are evaluated on the union of their nodes inside the overlap.

    Raises:
        ConfigurationError: If the time windows do not overlap.
    """
    lo = max(float(empirical.times[0]), float(pde.times[0]))
    hi = min(float(empirical.times[-1]), float(pde.times[-1]))
    if hi <= lo:
        raise ConfigurationError(
            f"Series windows are disjoint: [{empirical.times[0]}, {empirical.times[-1]}] "
            f"vs [{pde.times[0]}, {pde.times[-1]}]"
        )
    nodes = np.union1d(empirical.times, pde.times)
    nodes = nodes[(nodes >= lo) & (nodes <= hi)]
    gap = np.abs(empirical.at(nodes) - pde.at(nodes))
    i = int(np.argmax(gap))
    sup = float(gap[i])
    tol = comparison_tolerance(n, h, dt, calibration)
    report = ComparisonReport(sup, tol, sup <= tol, (lo, hi), float(nodes[i]))
    logger.info(report.summary())
    return report
