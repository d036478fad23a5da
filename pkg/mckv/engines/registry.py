"""Engine registry for discovering and managing scenario engines."""

from dataclasses import dataclass

from mckv.engines.analytic import CriteriaEngine
from mckv.engines.base import Engine, EngineInfo, EngineKind
from mckv.engines.monte_carlo import ParticleEngine
from mckv.engines.pde import LinearPdeEngine, LogPdeEngine


@dataclass
class EngineStatus:
    """Status of a registered engine."""

    engine: Engine
    info: EngineInfo
    available: bool
    availability_reason: str


class EngineRegistry:
    """Registry of scenario engines, in execution order."""

    def __init__(self) -> None:
        self._engines: dict[str, Engine] = {}
        self._register_defaults()

    def _register_defaults(self) -> None:
        # criteria -> fp solver -> particles
        self.register(CriteriaEngine())
        self.register(LinearPdeEngine())
        self.register(LogPdeEngine())
        self.register(ParticleEngine())

    def register(self, engine: Engine) -> None:
        """Register a new engine."""
        self._engines[engine.get_info().name] = engine

    def get(self, name: str) -> Engine | None:
        """Get an engine by name."""
        return self._engines.get(name)

    def names(self) -> list[str]:
        return list(self._engines)

    def list_all(self) -> list[EngineStatus]:
        """List all registered engines with their status."""
        return [
            EngineStatus(
                engine=engine,
                info=engine.get_info(),
                available=engine.is_available(),
                availability_reason=engine.get_availability_reason(),
            )
            for engine in self._engines.values()
        ]

    def list_available(self) -> list[EngineStatus]:
        """List only available engines."""
        return [status for status in self.list_all() if status.available]

    def get_by_kind(self, kind: EngineKind) -> list[EngineStatus]:
        """Get engines filtered by kind."""
        return [status for status in self.list_all() if status.info.kind == kind]
