"""Interacting particle systems with default cascades.

Linear feedback: each default shifts every survivor left by ``alpha / n``.
Log feedback: survivors shift by ``alpha * log(alive_after / alive_before)``.
Shifts can push further particles across zero; the cascade is resolved by
a fixed-point loop in which all new defaults of a round are detected
together.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple, Protocol

import numpy as np

from mckv.config import resolve_threads
from mckv.core.artifacts import write_csv, write_meta
from mckv.core.model import Density, ModelKind, ModelParams, TimeSeries, mass
from mckv.errors import ConfigurationError, InvalidDensityError
from mckv.particles.rng import Stream, draw, stream_layout

logger = logging.getLogger(__name__)

MIN_PARTICLES = 100
MACRO_CASCADE_FRACTION = 0.1


class Sampler(Protocol):
    """Anything with a quantile function, e.g. a ``Density``."""

    def ppf(self, u: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class PointMass:
    """All particles start at ``x0``."""

    x0: float

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return np.full(np.shape(u), float(self.x0))


def point_sampler(x0: float) -> PointMass:
    if x0 <= 0:
        raise ConfigurationError(f"Starting point must be > 0, got {x0}")
    return PointMass(x0)


def density_sampler(d: Density) -> Density:
    """Sampler drawing initial positions from ``d`` by inversion.

    Raises:
        InvalidDensityError: If ``d`` does not have unit mass.
    """
    total = mass(d)
    if abs(total - 1.0) > 1e-3:
        raise InvalidDensityError(f"Sampling density must have unit mass, got {total:.6g}")
    return d


@dataclass
class ParticleEnsemble:
    """Mutable state of an ``n``-particle system.

    Defaulted particles keep the position of the step at which they crossed.
    """

    n: int
    positions: np.ndarray
    alive: np.ndarray
    seed: int
    t: float = 0.0
    step: int = 0

    @property
    def defaulted_count(self) -> int:
        return int(self.n - np.count_nonzero(self.alive))


class CascadeResult(NamedTuple):
    """Outcome of one cascade resolution."""

    positions: np.ndarray
    alive: np.ndarray
    newly_defaulted: int
    rounds: int
    terminal: bool


def cascade_resolve(
    positions: np.ndarray,
    alive: np.ndarray,
    alpha: float,
    model: ModelKind,
    killed: np.ndarray | None = None,
) -> CascadeResult:
    """Remove defaulted particles and apply the feedback shifts until nothing new defaults.

    Args:
        positions: Positions after the diffusion step.
        alive: Alive flags before this event.
        alpha: Feedback strength.
        model: Which feedback to apply.
        killed: Particles already known to have crossed during the step
            (bridge correction), treated as defaults in the first round.

    Returns:
        New positions and flags, the number of new defaults and whether the
        whole population is gone under log feedback.
    """
    if model is ModelKind.LINEAR and alpha < 0:
        raise ConfigurationError("alpha must be >= 0 for the linear model")
    pos = np.array(positions, dtype=float)
    live = np.array(alive, dtype=bool)
    n = len(pos)

    pending = live & (pos <= 0.0)
    if killed is not None:
        pending |= live & killed

    total, rounds, terminal = 0, 0, False
    while pending.any():
        rounds += 1
        k = int(np.count_nonzero(pending))
        before = int(np.count_nonzero(live))
        live &= ~pending
        total += k
        after = before - k
        if model is ModelKind.LINEAR:
            shift = -alpha * k / n
        else:
            if after == 0:
                terminal = True
                break
            shift = alpha * math.log(after / before)
        if shift == 0.0:
            break
        pos[live] += shift
        pending = live & (pos <= 0.0)

    return CascadeResult(pos, live, total, rounds, terminal)


@dataclass(eq=False)
class ParticleRun:
    """Aggregate record of a particle simulation.

    ``value`` is the empirical loss (linear) or survival fraction (log);
    ``flux`` is the per-step default rate, or ``log(after/before) / dt``
    under log feedback.
    """

    params: ModelParams
    n: int
    dt: float
    seed: int
    bridge: bool
    value: TimeSeries
    flux: TimeSeries
    newly_defaulted: np.ndarray
    terminal_time: float | None = None
    paths: dict[float, np.ndarray] = field(default_factory=dict)

    @property
    def largest_cascade_fraction(self) -> float:
        """Largest single-step default count as a fraction of ``n``."""
        return float(self.newly_defaulted.max()) / self.n if self.newly_defaulted.size else 0.0

    @property
    def macroscopic_cascade(self) -> bool:
        return self.largest_cascade_fraction > MACRO_CASCADE_FRACTION

    @property
    def value_name(self) -> str:
        return "loss" if self.params.model is ModelKind.LINEAR else "survival"


def simulate(
    p0_sampler: Sampler,
    params: ModelParams,
    n: int,
    T: float,
    dt: float,
    seed: int,
    *,
    bridge: bool = False,
    threads: int | None = None,
    path_times: tuple[float, ...] = (),
) -> ParticleRun:
    """Euler-Maruyama simulation of the ``n``-particle system up to ``T``.

    Aggregates are bit-identical for the same ``(seed, n, dt, params)``
    regardless of ``threads``.

    Args:
        p0_sampler: Initial law, via its quantile function.
        params: Model parameters.
        n: Number of particles (at least 100).
        T: Final time.
        dt: Step length (smaller than ``T``).
        seed: 64-bit seed of the counter-based streams.
        bridge: Kill particles whose Brownian bridge crosses zero within a step.
        threads: Worker threads for random draws; resolved via settings.
        path_times: Times at which alive positions are kept.

    Raises:
        ConfigurationError: If ``n < 100`` or ``dt`` is not in (0, T).
    """
    if n < MIN_PARTICLES:
        raise ConfigurationError(f"n must be >= {MIN_PARTICLES}, got {n}")
    if dt <= 0 or dt >= T:
        raise ConfigurationError(f"dt must lie in (0, T), got dt={dt} T={T}")

    alpha, beta = params.alpha, params.beta
    model = params.model
    drift = beta * dt if model is ModelKind.LOG else 0.0
    steps = int(math.ceil(T / dt - 1e-9))
    workers = resolve_threads(threads)
    logger.info(
        "Particle run: model=%s alpha=%g n=%d dt=%g steps=%d threads=%d",
        model.value, alpha, n, dt, steps, workers,
    )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        u0 = draw("uniform", seed, Stream.INITIAL, 0, n, pool)
        ens = ParticleEnsemble(
            n=n,
            positions=np.asarray(p0_sampler.ppf(u0), dtype=float),
            alive=np.ones(n, dtype=bool),
            seed=seed,
        )
        first = cascade_resolve(ens.positions, ens.alive, alpha, model)
        ens.positions, ens.alive = first.positions, first.alive

        times = [0.0]
        values = [_aggregate(ens, model)]
        fluxes = [0.0]
        newly = [first.newly_defaulted]
        wanted = sorted(path_times)
        paths: dict[float, np.ndarray] = {}
        terminal_time = 0.0 if first.terminal else None

        for k in range(1, steps + 1):
            if terminal_time is not None:
                break
            before = int(np.count_nonzero(ens.alive))
            prev = ens.positions
            noise = draw("normal", seed, Stream.INCREMENTS, k, n, pool)
            moved = np.where(ens.alive, prev + drift + math.sqrt(dt) * noise, prev)

            killed = None
            if bridge:
                u = draw("uniform", seed, Stream.BRIDGE, k, n, pool)
                both = ens.alive & (prev > 0) & (moved > 0)
                with np.errstate(over="ignore"):
                    p_cross = np.exp(-2.0 * np.where(both, prev * moved, 0.0) / dt)
                killed = both & (u < p_cross)

            res = cascade_resolve(moved, ens.alive, alpha, model, killed)
            ens.positions, ens.alive = res.positions, res.alive
            ens.t, ens.step = k * dt, k

            times.append(ens.t)
            values.append(_aggregate(ens, model))
            newly.append(res.newly_defaulted)
            if model is ModelKind.LINEAR:
                fluxes.append(res.newly_defaulted / (n * dt))
            else:
                after = before - res.newly_defaulted
                fluxes.append(math.log(after / before) / dt if after > 0 and before > 0 else -math.inf)
            while wanted and ens.t >= wanted[0] - 1e-12:
                paths[wanted.pop(0)] = ens.positions[ens.alive].copy()
            if res.terminal:
                terminal_time = ens.t
                logger.warning("All particles defaulted at t=%.6g", ens.t)

    t_arr = np.array(times)
    return ParticleRun(
        params=params,
        n=n,
        dt=dt,
        seed=seed,
        bridge=bridge,
        value=TimeSeries(t_arr, np.array(values)),
        flux=TimeSeries(t_arr, np.array(fluxes)),
        newly_defaulted=np.array(newly, dtype=int),
        terminal_time=terminal_time,
        paths=paths,
    )


def _aggregate(ens: ParticleEnsemble, model: ModelKind) -> float:
    if model is ModelKind.LINEAR:
        return ens.defaulted_count / ens.n
    return (ens.n - ens.defaulted_count) / ens.n


def write_empirical(
    run: ParticleRun, out_dir: Path | str, extra_meta: dict[str, Any] | None = None
) -> Path:
    """Write ``empirical.csv`` (t, loss_or_survival, newly_defaulted) and ``meta.json``."""
    out = Path(out_dir)
    write_csv(
        out / "empirical.csv",
        ["t", "loss_or_survival", "newly_defaulted"],
        [run.value.times, run.value.values, run.newly_defaulted],
    )
    meta: dict[str, Any] = {
        "model": run.params.model.value,
        "params": run.params,
        "n": run.n,
        "dt": run.dt,
        "seed": run.seed,
        "bridge": run.bridge,
        "rng": stream_layout(),
        "terminal_time": run.terminal_time,
        "largest_cascade_fraction": run.largest_cascade_fraction,
    }
    meta.update(extra_meta or {})
    write_meta(out / "meta.json", meta)
    logger.info("Wrote particle run to %s", out)
    return out
