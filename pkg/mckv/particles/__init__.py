"""Interacting particle systems with default cascades."""

from mckv.particles.compare import ComparisonReport, compare_to_pde
from mckv.particles.ensemble import (
    CascadeResult,
    ParticleEnsemble,
    ParticleRun,
    cascade_resolve,
    density_sampler,
    point_sampler,
    simulate,
    write_empirical,
)
from mckv.particles.rng import Stream, draw

__all__ = [
    "CascadeResult",
    "ComparisonReport",
    "ParticleEnsemble",
    "ParticleRun",
    "Stream",
    "cascade_resolve",
    "compare_to_pde",
    "density_sampler",
    "draw",
    "point_sampler",
    "simulate",
    "write_empirical",
]
