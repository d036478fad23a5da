"""Solver for the non-local Fokker-Planck equation with log feedback.

The survival-normalized density ``r = q / qbar`` solves the local equation
``r_t = r_xx / 2 - (alpha lambda + beta) r_x - lambda r`` with
``lambda(t) = -r_x(t, 0) / 2``, and ``qbar' = lambda qbar``. The solver works
in ``r`` and rebuilds ``q = r qbar`` on demand.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.integrate import simpson

from mckv.core.artifacts import snapshot_filename, write_csv, write_meta
from mckv.core.model import Density, ModelKind, ModelParams, TimeSeries, mass
from mckv.errors import ConfigurationError, InvalidDensityError, SchemeFailureError
from mckv.solvers.entropy import EntropyKit
from mckv.solvers.fp_linear import NEGATIVITY_TOLERANCE, Snapshot
from mckv.solvers.scheme import (
    GridConfig,
    StopEvent,
    Trigger,
    implicit_columns,
    interior_flux,
    make_grid,
    stencil_for,
    trapezoid_mass,
)

logger = logging.getLogger(__name__)

SURVIVAL_FLOOR = 1e-300
ORIGIN_TOLERANCE = 1e-8
SOBOLEV_GROWTH_LIMIT = 0.02


@dataclass(eq=False)
class LogSolution:
    """Record of one log-feedback run."""

    params: ModelParams
    grid_config: GridConfig
    x: np.ndarray
    lambda_: TimeSeries
    qbar: TimeSeries
    lambda_l2: TimeSeries
    I: TimeSeries
    J: TimeSeries
    r_snapshots: list[Snapshot] = field(default_factory=list)
    blowup: StopEvent | None = None
    steps: int = 0
    max_mass_drift: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.lambda_.times

    @property
    def q_snapshots(self) -> list[Snapshot]:
        """Sub-probability densities ``q = r qbar`` at the snapshot times."""
        return [
            Snapshot(snap.t, snap.values * float(self.qbar.at(snap.t)))
            for snap in self.r_snapshots
        ]


def sobolev_norms(q0: Density, x: np.ndarray) -> tuple[float, float]:
    """Discrete ``H^1`` norm of ``q0`` and ``int_0^1 q0^2 / x`` on the nodes ``x``.

    The weighted integrand is taken as zero at ``x = 0``, its limit for data
    vanishing at the origin.
    """
    v = q0.pdf(x)
    h = x[1] - x[0]
    h1 = math.sqrt(float(h * np.sum(v * v) + h * np.sum((np.diff(v) / h) ** 2)))
    near = x <= 1.0
    if near.sum() <= 2:
        return h1, 0.0
    xn = x[near]
    integrand = np.divide(v[near] ** 2, xn, out=np.zeros_like(xn), where=xn > 0)
    return h1, float(simpson(integrand, x=xn))


def sobolev_growth(q0: Density, x: np.ndarray) -> float:
    """Relative growth of both norms when the spacing of ``x`` shrinks fourfold.

    Finite norms converge at second order on smooth data, so the growth is
    tiny; a norm that diverges at the origin keeps growing with resolution.
    """
    fine = make_grid(0.25 * (x[1] - x[0]), float(x[-1]))
    coarse_norms = sobolev_norms(q0, x)
    fine_norms = sobolev_norms(q0, fine)
    growth = 0.0
    for c, f in zip(coarse_norms, fine_norms, strict=True):
        if not (math.isfinite(c) and math.isfinite(f)):
            return math.inf
        if f > 0:
            growth = max(growth, (f - c) / f)
    return growth


def _check_initial(q0: Density, x: np.ndarray) -> None:
    total = mass(q0)
    if abs(total - 1.0) > 1e-3:
        raise InvalidDensityError(f"Initial density must have unit mass, got {total:.6g}")
    if float(q0.pdf(0.0)) > ORIGIN_TOLERANCE:
        raise InvalidDensityError("Initial density must vanish at the origin")
    growth = sobolev_growth(q0, x)
    if growth > SOBOLEV_GROWTH_LIMIT:
        raise InvalidDensityError(
            "Initial density is not in the required Sobolev class "
            f"(norms grow by {growth:.1%} under refinement)"
        )


def solve_log(
    q0: Density,
    params: ModelParams,
    T: float,
    grid_config: GridConfig,
) -> LogSolution:
    """Advance the log-feedback equation in normalized variables.

    Per step: backward-Euler diffusion, explicit drift and reaction, the
    fixed point ``lambda <- -r_x(0) / 2`` on the new state, renormalization of
    ``r`` to unit mass, ``qbar <- qbar exp(lambda dt)`` and accumulation of
    ``int lambda^2``.

    Raises:
        ConfigurationError: On a wrong model, ``T <= 0`` or a step violating
            ``dt <= h^2 / 2``.
        InvalidDensityError: If ``q0`` lacks unit mass, does not vanish at
            zero or is not in the Sobolev class.
        SchemeFailureError: If ``r`` goes negative beyond roundoff.
    """
    if params.model is not ModelKind.LOG:
        raise ConfigurationError("solve_log needs the log model")
    if T <= 0:
        raise ConfigurationError(f"T must be > 0, got {T}")
    cfg = grid_config
    cfg.check_step_restriction()

    h = cfg.h
    alpha, beta = params.alpha, params.beta
    x_max = cfg.x_max or 40.0 * q0.scale + 1.2 * max(beta, 0.0) * T
    x = make_grid(h, x_max)
    _check_initial(q0, x)
    kit = EntropyKit(params.kappa)

    r = q0.pdf(x)
    r[0] = 0.0
    r[-1] = 0.0
    r /= trapezoid_mass(r, h)
    logger.info(
        "Log run: alpha=%g beta=%g T=%g nodes=%d h=%g dt=%g",
        alpha, beta, T, len(x), h, cfg.dt,
    )

    t, step = 0.0, 0
    lam = -interior_flux(r[1:-1], h)
    qbar, l2 = 1.0, 0.0
    I0, J0 = kit.functionals(r, x, lam)
    rec_t, rec_lam, rec_q, rec_l2, rec_I, rec_J = [t], [lam], [qbar], [l2], [I0], [J0]

    requested = sorted(tt for tt in cfg.snapshot_times if 0 <= tt <= T)
    snapshots: list[Snapshot] = []
    next_snap = 0
    pair_due = False
    while next_snap < len(requested) and requested[next_snap] <= 0:
        snapshots.append(Snapshot(t, r.copy()))
        pair_due = cfg.snapshot_pairs
        next_snap += 1

    stop: StopEvent | None = None
    max_drift = 0.0
    while t < T * (1 - 1e-12):
        dt_adapt = cfg.step_for(alpha * lam + beta)
        if dt_adapt < cfg.dt * cfg.step_collapse:
            stop = StopEvent(t, Trigger.STEP_COLLAPSE, step)
            break
        dt = min(dt_adapt, T - t)
        t_new = t + dt

        cols = implicit_columns(r, h, dt)
        f0 = interior_flux(cols.state, h)
        fd = [interior_flux(cols.drift[:, k], h) for k in range(3)]

        lam_k = lam
        converged = False
        for _ in range(cfg.fixed_point_max_iter):
            a = -(alpha * lam_k + beta)
            lam_next = -((1.0 - lam_k * dt) * f0 + dt * a * fd[stencil_for(a, h).value])
            if not math.isfinite(lam_next):
                break
            if abs(lam_next - lam_k) < cfg.fixed_point_tol:
                lam_k = lam_next
                converged = True
                break
            lam_k = lam_next
        if not converged:
            stop = StopEvent(t_new, Trigger.FIXED_POINT, step + 1)
            break

        a = -(alpha * lam_k + beta)
        interior = (1.0 - lam_k * dt) * cols.state + dt * a * cols.drift[:, stencil_for(a, h).value]
        r_new = np.concatenate(([0.0], interior, [0.0]))
        mass_pre = trapezoid_mass(r_new, h)
        l2_new = l2 + dt * lam_k * lam_k

        trigger = None
        if abs(lam_k) * dt > cfg.flux_overflow * h:
            trigger = Trigger.FLUX_OVERFLOW
        elif abs(a) * h > cfg.peclet_cap:
            trigger = Trigger.PECLET
        elif 1.0 - mass_pre > cfg.mass_drop_limit:
            trigger = Trigger.MASS_DROP
        elif l2_new > cfg.lambda_l2_cap * (1.0 + t_new):
            trigger = Trigger.LAMBDA_L2
        if trigger is not None:
            stop = StopEvent(t_new, trigger, step + 1)
            break

        if r_new.min() < -NEGATIVITY_TOLERANCE * max(1.0, float(r_new.max())):
            raise SchemeFailureError(f"r went negative ({r_new.min():.3g}) at t={t_new:.6g}")

        max_drift = max(max_drift, abs(mass_pre - 1.0))
        logger.debug("t=%.6g lambda=%.6g mass drift=%.3g", t_new, lam_k, mass_pre - 1.0)
        r = r_new / mass_pre
        qbar *= math.exp(lam_k * dt)
        lam, l2, t = lam_k, l2_new, t_new
        step += 1

        snap_now = pair_due
        pair_due = False
        while next_snap < len(requested) and t >= requested[next_snap] - 1e-12:
            snap_now = True
            pair_due = cfg.snapshot_pairs
            next_snap += 1
        if snap_now:
            snapshots.append(Snapshot(t, r.copy()))

        underflow = qbar < SURVIVAL_FLOOR
        if snap_now or underflow or step % cfg.record_every == 0 or t >= T * (1 - 1e-12):
            I_t, J_t = kit.functionals(r, x, lam)
            rec_t.append(t)
            rec_lam.append(lam)
            rec_q.append(qbar)
            rec_l2.append(l2)
            rec_I.append(I_t)
            rec_J.append(J_t)
        if underflow:
            stop = StopEvent(t, Trigger.SURVIVAL_UNDERFLOW, step)
            break

    if stop is not None:
        logger.warning(
            "Log run stopped at t=%.6g by %s (step %d)", stop.time, stop.trigger.value, stop.step
        )

    times = np.array(rec_t)
    return LogSolution(
        params=params,
        grid_config=cfg,
        x=x,
        lambda_=TimeSeries(times, np.array(rec_lam)),
        qbar=TimeSeries(times, np.array(rec_q)),
        lambda_l2=TimeSeries(times, np.array(rec_l2)),
        I=TimeSeries(times, np.array(rec_I)),
        J=TimeSeries(times, np.array(rec_J)),
        r_snapshots=snapshots,
        blowup=stop,
        steps=step,
        max_mass_drift=max_drift,
    )


def entropy_series(sol: LogSolution, kit: EntropyKit) -> tuple[TimeSeries, TimeSeries]:
    """``I`` and ``J`` at the snapshot times of ``sol`` for the profile of ``kit``.

    Raises:
        ConfigurationError: If the run kept no snapshots.
    """
    if not sol.r_snapshots:
        raise ConfigurationError("entropy_series needs r snapshots")
    times, I_vals, J_vals = [], [], []
    for snap in sol.r_snapshots:
        if times and snap.t <= times[-1]:
            continue
        I_t, J_t = kit.functionals(snap.values, sol.x, float(sol.lambda_.at(snap.t)))
        times.append(snap.t)
        I_vals.append(I_t)
        J_vals.append(J_t)
    t = np.array(times)
    return TimeSeries(t, np.array(I_vals)), TimeSeries(t, np.array(J_vals))


@dataclass(frozen=True)
class LambdaBudget:
    """Cumulative ``int_0^t lambda^2`` with its straight-line and affine summaries.

    ``residual`` is the largest deviation from the least-squares line as a
    fraction of the range of the cumulative series. ``affine_constant`` is
    the smallest ``C`` with ``int_0^t lambda^2 <= C (1 + t)`` on the run.
    ``affine_excess`` is how far the second half of the run rises above the
    affine majorant of the first half (least-squares slope, intercept lifted
    over every first-half point), as a fraction of the range; zero for a
    budget that grows at most linearly.
    """

    cumulative: TimeSeries
    slope: float
    intercept: float
    residual: float
    affine_constant: float
    affine_excess: float = 0.0


def lambda_l2_budget(sol: LogSolution) -> LambdaBudget:
    """Summarize the ``lambda`` energy of a completed or stopped run."""
    t = sol.lambda_l2.times
    cum = sol.lambda_l2.values
    if len(t) >= 2:
        slope, intercept = np.polyfit(t, cum, 1)
    else:
        slope, intercept = 0.0, float(cum[0])
    spread = float(np.ptp(cum))
    deviation = float(np.max(np.abs(cum - (slope * t + intercept))))
    residual = deviation / spread if spread > 0 else 0.0
    return LambdaBudget(
        cumulative=sol.lambda_l2,
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
        affine_constant=float(np.max(cum / (1.0 + t))),
        affine_excess=_affine_excess(t, cum, spread),
    )


def _affine_excess(t: np.ndarray, cum: np.ndarray, spread: float) -> float:
    if len(t) < 4 or spread <= 0:
        return 0.0
    early = t <= 0.5 * t[-1]
    if early.sum() < 2 or early.all():
        return 0.0
    slope = float(np.polyfit(t[early], cum[early], 1)[0])
    lift = float(np.max(cum[early] - slope * t[early]))
    above = cum[~early] - (lift + slope * t[~early])
    return max(0.0, float(above.max())) / spread


def survival_rate_bound(budget: LambdaBudget) -> float:
    """Rate ``C'`` with ``qbar(t) >= exp(-C' t)`` for ``t >= 1``.

    From ``log qbar(t) = int lambda >= -sqrt(t) sqrt(C (1 + t)) >= -sqrt(2C) t``.
    """
    return math.sqrt(2.0 * budget.affine_constant)


def write_run(
    sol: LogSolution, out_dir: Path | str, extra_meta: dict[str, Any] | None = None
) -> Path:
    """Write ``series.csv``, ``snapshot_<t>.csv`` (x, r, q) and ``meta.json``."""
    out = Path(out_dir)
    write_csv(
        out / "series.csv",
        ["t", "lambda", "qbar", "I", "J", "lambda_l2_cum"],
        [
            sol.times,
            sol.lambda_.values,
            sol.qbar.values,
            sol.I.values,
            sol.J.values,
            sol.lambda_l2.values,
        ],
    )
    for r_snap, q_snap in zip(sol.r_snapshots, sol.q_snapshots, strict=True):
        write_csv(
            out / snapshot_filename(r_snap.t),
            ["x", "r", "q"],
            [sol.x, r_snap.values, q_snap.values],
        )
    meta: dict[str, Any] = {
        "model": sol.params.model.value,
        "params": sol.params,
        "grid": sol.grid_config,
        "steps": sol.steps,
        "max_mass_drift": sol.max_mass_drift,
        "trigger": None if sol.blowup is None else sol.blowup.trigger.value,
        "event_time": None if sol.blowup is None else sol.blowup.time,
    }
    meta.update(extra_meta or {})
    write_meta(out / "meta.json", meta)
    logger.info("Wrote log run to %s", out)
    return out
