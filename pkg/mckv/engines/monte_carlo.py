"""Particle engine: Euler-Maruyama systems with default cascades."""

import numpy as np

from mckv.core.model import Density, ModelKind
from mckv.engines.base import (
    Engine,
    EngineInfo,
    EngineKind,
    EngineResult,
    RunContext,
    max_particles,
)
from mckv.engines.scenario import Scenario
from mckv.errors import ConfigurationError
from mckv.particles.ensemble import (
    Sampler,
    density_sampler,
    point_sampler,
    simulate,
    write_empirical,
)


class ParticleEngine(Engine):
    """Interacting particles driven by counter-based random streams."""

    def get_info(self) -> EngineInfo:
        return EngineInfo(
            name="particles",
            kind=EngineKind.MONTE_CARLO,
            description="N-particle system with simultaneous cascade resolution",
            models=("linear", "log"),
            parallel=True,
            capacity=max_particles(),
        )

    def is_available(self) -> bool:
        return max_particles() >= 100

    def get_availability_reason(self) -> str:
        capacity = max_particles()
        if capacity >= 100:
            return f"Memory allows up to {capacity:,} particles"
        return "Not enough free memory for 100 particles"

    def applies(self, scenario: Scenario) -> bool:
        return scenario.particles is not None

    def _sampler(self, scenario: Scenario, ctx: RunContext) -> Sampler:
        spec = scenario.density
        if spec.kind == "narrow_gaussian" and scenario.particles.point_start:
            return point_sampler(spec.x0)
        start = spec.build(scenario.params, ctx.base_dir)
        if not isinstance(start, Density):
            raise ConfigurationError("density.kind: particles need a density")
        return density_sampler(start)

    def execute(self, scenario: Scenario, ctx: RunContext) -> EngineResult:
        spec = scenario.particles
        capacity = max_particles()
        if spec.n > capacity:
            raise ConfigurationError(
                f"particles.n: {spec.n} exceeds the memory bound of {capacity} particles"
            )
        seed = ctx.seed if spec.seed is None else spec.seed
        run = simulate(
            self._sampler(scenario, ctx),
            scenario.params,
            spec.n,
            scenario.T,
            spec.dt,
            seed,
            bridge=spec.bridge,
            threads=ctx.threads,
        )
        out = write_empirical(run, ctx.out_dir / "particles", {"scenario": scenario.name})

        event_time = None
        trigger = None
        if run.macroscopic_cascade:
            event_time = float(run.value.times[int(np.argmax(run.newly_defaulted))])
            trigger = "macroscopic_cascade"
        elif run.terminal_time is not None and scenario.params.model is ModelKind.LOG:
            event_time = run.terminal_time
            trigger = "total_default"
        return EngineResult(
            engine="particles",
            kind=EngineKind.MONTE_CARLO,
            blowup=event_time is not None,
            event_time=event_time,
            trigger=trigger,
            series=run.value,
            resolution={"n": spec.n, "dt": spec.dt},
            metrics={
                "seed": seed,
                "largest_cascade_fraction": run.largest_cascade_fraction,
                "final_value": run.value.final,
            },
            artifacts=out,
        )
