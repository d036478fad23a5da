"""Base classes for scenario engines."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any

import psutil

from mckv.core.criteria import Verdict
from mckv.core.model import TimeSeries

if TYPE_CHECKING:
    from mckv.engines.scenario import Scenario

# positions, proposals, normals, uniforms and flags per particle
BYTES_PER_PARTICLE = 48


def get_available_memory_gb() -> float:
    """Get available system memory in GB."""
    return psutil.virtual_memory().available / (1024**3)


def max_particles(memory_fraction: float = 0.8) -> int:
    """Largest particle count whose working arrays fit in available memory.

    Args:
        memory_fraction: Fraction of available memory to use (default 80%).
    """
    available_bytes = get_available_memory_gb() * memory_fraction * (1024**3)
    return int(available_bytes // BYTES_PER_PARTICLE)


class EngineKind(Enum):
    """How an engine arrives at its answer."""

    ANALYTIC = "analytic"
    PDE = "pde"
    MONTE_CARLO = "monte_carlo"


@dataclass
class EngineInfo:
    """Information about a registered engine."""

    name: str
    kind: EngineKind
    description: str
    models: tuple[str, ...]  # model kinds handled
    parallel: bool
    capacity: int | None  # max particles, None = unlimited


@dataclass
class RunContext:
    """Where and how an engine runs inside a scenario."""

    out_dir: Path
    threads: int
    seed: int
    base_dir: Path | None = None  # resolves relative tabulated-density paths


@dataclass
class EngineResult:
    """What an engine reports back to the executor.

    ``series`` is the loss ``s`` (linear) or survival ``qbar`` (log) used for
    cross-engine comparison.
    """

    engine: str
    kind: EngineKind
    blowup: bool = False
    event_time: float | None = None
    trigger: str | None = None
    verdict: Verdict | None = None
    series: TimeSeries | None = None
    resolution: dict[str, float] = field(default_factory=dict)
    metrics: dict[str, Any] = field(default_factory=dict)
    artifacts: Path | None = None


class Engine(ABC):
    """Abstract base class for scenario engines."""

    @abstractmethod
    def get_info(self) -> EngineInfo:
        """Return information about this engine."""
        ...

    @abstractmethod
    def is_available(self) -> bool:
        """Check if this engine can run on this machine."""
        ...

    @abstractmethod
    def get_availability_reason(self) -> str:
        """Explain why engine is/isn't available."""
        ...

    @abstractmethod
    def applies(self, scenario: "Scenario") -> bool:
        """Whether the scenario requests this engine."""
        ...

    @abstractmethod
    def execute(self, scenario: "Scenario", ctx: RunContext) -> EngineResult:
        """Run the engine and write its artifacts under ``ctx.out_dir``."""
        ...
