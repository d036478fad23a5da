"""Free-boundary Fokker-Planck solver for linear feedback.

Solves ``p_t = p_xx / 2 + alpha N(t) p_x`` on the fixed half-line with
``p(t, 0) = 0`` and ``N(t) = p_x(t, 0) / 2``. The drift carries the motion of
the free boundary, so no remeshing is needed. The loss ``s(t) = int_0^t N``
is the shift between these coordinates and the Stefan ones.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.integrate import cumulative_trapezoid

from mckv.core.artifacts import snapshot_filename, write_csv, write_meta
from mckv.core.model import Density, ModelKind, ModelParams, TimeSeries, mass
from mckv.core.selfsim import SelfSimilarStart
from mckv.errors import ConfigurationError, InvalidDensityError, SchemeFailureError
from mckv.solvers.scheme import (
    GridConfig,
    Stencil,
    StopEvent,
    Trigger,
    boundary_flux,
    implicit_columns,
    interior_flux,
    jump_indicator_values,
    make_grid,
    stencil_for,
    trapezoid_mass,
)

logger = logging.getLogger(__name__)

NEGATIVITY_TOLERANCE = 1e-10
INITIAL_MASS_TOLERANCE = 1e-3

__all__ = [
    "LinearSolution",
    "MTransform",
    "BarrierReport",
    "Snapshot",
    "barrier_check",
    "barrier_report",
    "boundary_flux",
    "boundary_ordering",
    "jump_indicator",
    "m_transform",
    "mass_ledger_error",
    "solve_linear",
    "write_run",
]


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Full nodal state (both boundary nodes included) at one time."""

    t: float
    values: np.ndarray


@dataclass(eq=False)
class LinearSolution:
    """Record of one linear-feedback run."""

    params: ModelParams
    grid_config: GridConfig
    x: np.ndarray
    N: TimeSeries
    s: TimeSeries
    mass: TimeSeries
    jump: TimeSeries
    snapshots: list[Snapshot] = field(default_factory=list)
    blowup: StopEvent | None = None
    steps: int = 0
    selfsimilar: SelfSimilarStart | None = None

    @property
    def times(self) -> np.ndarray:
        return self.N.times

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    def snapshot_index(self, t: float) -> int:
        """Index of the snapshot closest to ``t``."""
        if not self.snapshots:
            raise ConfigurationError("Run recorded no snapshots")
        times = np.array([snap.t for snap in self.snapshots])
        return int(np.argmin(np.abs(times - t)))


def jump_indicator(p_grid: np.ndarray, alpha: float, x: np.ndarray) -> float:
    """``sup_{x > 0} alpha F(x) / x`` with ``F(x) = int_0^x p``.

    Values of one or more signal that removing the mass near the boundary
    pushes at least as much mass across it, i.e. a jump of the loss.
    """
    return jump_indicator_values(np.asarray(p_grid, dtype=float), np.asarray(x), alpha)


def _initial_state(
    p0: Density | SelfSimilarStart, x: np.ndarray
) -> tuple[np.ndarray, Callable[[float], float]]:
    if isinstance(p0, SelfSimilarStart):
        u = p0.initial(x)
        u[0] = 0.0
        y_max = float(x[-1])

        def right(t: float) -> float:
            return p0.right_value(t, y_max)

        u[-1] = right(0.0)
        return u, right

    total = mass(p0)
    if abs(total - 1.0) > INITIAL_MASS_TOLERANCE:
        raise InvalidDensityError(f"Initial density must have unit mass, got {total:.6g}")
    u = p0.pdf(x)
    u[0] = 0.0
    u[-1] = 0.0
    return u, lambda t: 0.0


def solve_linear(
    p0: Density | SelfSimilarStart,
    params: ModelParams,
    T: float,
    grid_config: GridConfig,
) -> LinearSolution:
    """Advance the linear-feedback equation to time ``T`` or to a blow-up trigger.

    Each step solves the diffusion implicitly and applies the drift
    explicitly. ``N`` at the new time is found by the fixed point
    ``N <- boundary_flux(p^{n+1}(N))``.

    Args:
        p0: Unit-mass initial density, or self-similar start data (which also
            prescribes the exact value at ``x_max``).
        params: Linear-feedback parameters.
        T: Final time.
        grid_config: Resolution and stopping rules.

    Returns:
        The run record. A triggered stop is stored in ``blowup``.

    Raises:
        ConfigurationError: On a wrong model, ``T <= 0`` or a step violating
            ``dt <= h^2 / 2``.
        InvalidDensityError: If ``p0`` does not have unit mass.
        SchemeFailureError: If the density goes negative beyond roundoff.
    """
    if params.model is not ModelKind.LINEAR:
        raise ConfigurationError("solve_linear needs the linear model")
    if T <= 0:
        raise ConfigurationError(f"T must be > 0, got {T}")
    cfg = grid_config
    cfg.check_step_restriction()

    h = cfg.h
    x = make_grid(h, cfg.x_max or 40.0 * p0.scale)
    u, right = _initial_state(p0, x)
    alpha = params.alpha
    logger.info(
        "Linear run: alpha=%g T=%g nodes=%d h=%g dt=%g", alpha, T, len(x), h, cfg.dt
    )

    t, step = 0.0, 0
    N = interior_flux(u[1:-1], h)
    s = 0.0
    m = trapezoid_mass(u, h)
    jump = jump_indicator_values(u, x, alpha)
    rec_t, rec_N, rec_s, rec_m, rec_j = [t], [N], [s], [m], [jump]

    requested = sorted(tt for tt in cfg.snapshot_times if 0 <= tt <= T)
    snapshots: list[Snapshot] = []
    next_snap = 0
    pair_due = False
    while next_snap < len(requested) and requested[next_snap] <= 0:
        snapshots.append(Snapshot(t, u.copy()))
        pair_due = cfg.snapshot_pairs
        next_snap += 1

    stop: StopEvent | None = None
    if cfg.jump_trigger and jump >= 1.0:
        stop = StopEvent(0.0, Trigger.JUMP_INDICATOR, 0)

    while stop is None and t < T * (1 - 1e-12):
        dt_adapt = cfg.step_for(alpha * N)
        if dt_adapt < cfg.dt * cfg.step_collapse:
            stop = StopEvent(t, Trigger.STEP_COLLAPSE, step)
            break
        dt = min(dt_adapt, T - t)
        t_new = t + dt

        cols = implicit_columns(u, h, dt, right(t_new))
        base = cols.state + cols.boundary
        base_flux = interior_flux(base, h)
        drift_flux = [interior_flux(cols.drift[:, k], h) for k in range(3)]

        N_k = N
        converged = False
        for _ in range(cfg.fixed_point_max_iter):
            c = alpha * N_k
            N_next = base_flux + dt * c * drift_flux[stencil_for(c, h).value]
            if not math.isfinite(N_next):
                break
            if abs(N_next - N_k) < cfg.fixed_point_tol:
                N_k = N_next
                converged = True
                break
            N_k = N_next
        if not converged:
            stop = StopEvent(t_new, Trigger.FIXED_POINT, step + 1)
            break

        c = alpha * N_k
        interior = base + dt * c * cols.drift[:, stencil_for(c, h).value]
        u_new = np.concatenate(([0.0], interior, [right(t_new)]))
        m_new = trapezoid_mass(u_new, h)
        jump_new = jump_indicator_values(u_new, x, alpha)

        trigger = None
        if N_k * dt > cfg.flux_overflow * h:
            trigger = Trigger.FLUX_OVERFLOW
        elif c * h > cfg.peclet_cap:
            trigger = Trigger.PECLET
        elif m > 0 and (m - m_new) / m > cfg.mass_drop_limit:
            trigger = Trigger.MASS_DROP
        elif cfg.jump_trigger and jump_new >= 1.0:
            trigger = Trigger.JUMP_INDICATOR
        if trigger is not None:
            stop = StopEvent(t_new, trigger, step + 1)
            break

        if u_new.min() < -NEGATIVITY_TOLERANCE * max(1.0, float(u_new.max())):
            raise SchemeFailureError(
                f"Density went negative ({u_new.min():.3g}) at t={t_new:.6g}"
            )

        s += dt * N_k
        u, N, m, jump, t = u_new, N_k, m_new, jump_new, t_new
        step += 1

        snap_now = pair_due
        pair_due = False
        while next_snap < len(requested) and t >= requested[next_snap] - 1e-12:
            snap_now = True
            pair_due = cfg.snapshot_pairs
            next_snap += 1
        if snap_now:
            snapshots.append(Snapshot(t, u.copy()))

        if snap_now or step % cfg.record_every == 0 or t >= T * (1 - 1e-12):
            rec_t.append(t)
            rec_N.append(N)
            rec_s.append(s)
            rec_m.append(m)
            rec_j.append(jump)

    if stop is not None:
        logger.warning(
            "Linear run stopped at t=%.6g by %s (step %d)", stop.time, stop.trigger.value, stop.step
        )

    times = np.array(rec_t)
    return LinearSolution(
        params=params,
        grid_config=cfg,
        x=x,
        N=TimeSeries(times, np.array(rec_N)),
        s=TimeSeries(times, np.array(rec_s)),
        mass=TimeSeries(times, np.array(rec_m)),
        jump=TimeSeries(times, np.array(rec_j)),
        snapshots=snapshots,
        blowup=stop,
        steps=step,
        selfsimilar=p0 if isinstance(p0, SelfSimilarStart) else None,
    )


def mass_ledger_error(sol: LinearSolution) -> float:
    """Largest deviation of ``mass(t) + s(t)`` from the initial mass."""
    ledger = sol.mass.values + sol.s.values
    return float(np.max(np.abs(ledger - ledger[0])))


@dataclass(frozen=True)
class MTransform:
    """Double integral of ``1 - alpha u`` from the free boundary, with its defect.

    ``x`` are Stefan coordinates (``p``-nodes shifted by ``alpha s(t)``).
    ``residual`` is the max over interior nodes of the defect of
    ``m_t = m_xx / 2 + alpha K m_x - 1/2`` in the frame moving with ``alpha s``,
    where ``K`` is the outflow the scheme conserves over the step.
    ``outflow_mismatch`` is ``|K - N|`` for the recorded flux ``N``; it is
    O(h^2) and bounds the residual up to a factor ``alpha^2``.
    """

    t: float
    x: np.ndarray
    m: np.ndarray
    residual: float
    boundary_value: float
    boundary_slope: float
    outflow_mismatch: float = 0.0


def _double_integral(p: np.ndarray, xi: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    inner = cumulative_trapezoid(1.0 - alpha * p, xi, initial=0.0)
    return cumulative_trapezoid(inner, xi, initial=0.0), inner


def m_transform(sol: LinearSolution, t: float) -> MTransform:
    """Build ``m(t, .)`` at snapshot time ``t`` and measure its equation defect.

    Needs the snapshot one step after ``t`` (``snapshot_pairs=True``) for
    the time difference.

    Raises:
        ConfigurationError: If the neighbouring snapshot is missing or more
            than two base steps away.
    """
    i = sol.snapshot_index(t)
    if i + 1 >= len(sol.snapshots):
        raise ConfigurationError(f"No snapshot after t={t:g} for the time difference")
    first, second = sol.snapshots[i], sol.snapshots[i + 1]
    tau = second.t - first.t
    if tau <= 0 or tau > 2.0 * sol.grid_config.dt * (1 + 1e-9):
        raise ConfigurationError(
            f"Snapshots at {first.t:g} and {second.t:g} are too far apart"
        )

    alpha = sol.params.alpha
    h = sol.h
    xi = sol.x
    M1, slope1 = _double_integral(first.values, xi, alpha)
    M2, _ = _double_integral(second.values, xi, alpha)
    # Diffusion acts on the new level and drift on the old one, as in the step.
    c = alpha * float(sol.N.at(second.t))
    outflow = _discrete_outflow(first.values, second.values, c, h)
    M_t = (M2[1:-1] - M1[1:-1]) / tau
    M_xi = (M1[2:] - M1[:-2]) / (2 * h)
    M_xixi = (M2[2:] - 2 * M2[1:-1] + M2[:-2]) / (h * h)
    defect = M_t - alpha * outflow * M_xi - 0.5 * M_xixi + 0.5

    shift = alpha * float(sol.s.at(first.t))
    return MTransform(
        t=first.t,
        x=xi + shift,
        m=M1,
        residual=float(np.max(np.abs(defect))),
        boundary_value=abs(float(M1[0])),
        boundary_slope=abs(float(slope1[0])),
        outflow_mismatch=abs(outflow - c / alpha) if alpha > 0 else 0.0,
    )


def _discrete_outflow(u1: np.ndarray, u2: np.ndarray, c: float, h: float) -> float:
    """Mass leaving through ``x = 0`` per unit time over one step of the scheme."""
    weight = {Stencil.CENTRAL: 0.5, Stencil.FORWARD: 1.0, Stencil.BACKWARD: 0.0}
    return float(u2[1] / (2 * h) + c * weight[stencil_for(c, h)] * u1[1])


@dataclass(frozen=True)
class BarrierReport:
    """Outcome of comparing a run with the barrier ``beta sqrt(2t) / alpha``."""

    holds: bool
    max_excess: float
    max_scaled_flux: float


def barrier_report(
    sol: LinearSolution,
    beta: float,
    t_min: float = 0.01,
    tol: float = 1e-3,
    flux_bound: float = 1e2,
) -> BarrierReport:
    """Check ``s(t) <= beta sqrt(2t) / alpha`` and boundedness of ``N(t) sqrt(t)``.

    Args:
        sol: A completed run.
        beta: Barrier rate.
        t_min: Start of the window for the flux check.
        tol: Allowed excess of ``s`` over the barrier.
        flux_bound: Largest ``N(t) sqrt(t)`` accepted as bounded.
    """
    t = sol.times
    alpha = sol.params.alpha
    if alpha > 0:
        barrier = beta * np.sqrt(2.0 * t) / alpha
        excess = float(np.max(sol.s.values - barrier))
    else:
        excess = -math.inf
    window = t >= t_min
    scaled = sol.N.values[window] * np.sqrt(t[window])
    max_scaled = float(np.max(scaled)) if scaled.size else 0.0
    holds = excess <= tol and math.isfinite(max_scaled) and max_scaled <= flux_bound
    return BarrierReport(holds=holds, max_excess=excess, max_scaled_flux=max_scaled)


def barrier_check(sol: LinearSolution, beta: float, t_min: float = 0.01) -> bool:
    """True when the loss stays under the self-similar barrier and ``N sqrt(t)`` is bounded."""
    return barrier_report(sol, beta, t_min=t_min).holds


def boundary_ordering(sol_upper: LinearSolution, sol_lower: LinearSolution) -> float:
    """Largest ``s_lower(t) - s_upper(t)`` over the common time window.

    Non-positive values (up to tolerance) mean the loss of ``sol_lower``
    never overtakes that of ``sol_upper``.
    """
    t_end = min(sol_upper.times[-1], sol_lower.times[-1])
    t = sol_lower.times[sol_lower.times <= t_end]
    return float(np.max(sol_lower.s.at(t) - sol_upper.s.at(t)))


def write_run(
    sol: LinearSolution, out_dir: Path | str, extra_meta: dict[str, Any] | None = None
) -> Path:
    """Write ``series.csv``, one ``snapshot_<t>.csv`` per snapshot and ``meta.json``."""
    out = Path(out_dir)
    write_csv(
        out / "series.csv",
        ["t", "N", "s", "mass", "jump_indicator"],
        [sol.times, sol.N.values, sol.s.values, sol.mass.values, sol.jump.values],
    )
    for snap in sol.snapshots:
        write_csv(out / snapshot_filename(snap.t), ["x", "p"], [sol.x, snap.values])
    meta: dict[str, Any] = {
        "model": sol.params.model.value,
        "params": sol.params,
        "grid": sol.grid_config,
        "steps": sol.steps,
        "trigger": None if sol.blowup is None else sol.blowup.trigger.value,
        "event_time": None if sol.blowup is None else sol.blowup.time,
    }
    meta.update(extra_meta or {})
    write_meta(out / "meta.json", meta)
    logger.info("Wrote linear run to %s", out)
    return out
