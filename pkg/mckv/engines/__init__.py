"""Scenario engines and their orchestration."""

from mckv.engines.analytic import CriteriaEngine
from mckv.engines.base import Engine, EngineInfo, EngineKind, EngineResult, RunContext
from mckv.engines.executor import ExitCode, RunOutcome, ScenarioExecutor, SweepOutcome
from mckv.engines.monte_carlo import ParticleEngine
from mckv.engines.pde import LinearPdeEngine, LogPdeEngine
from mckv.engines.registry import EngineRegistry, EngineStatus
from mckv.engines.scenario import Scenario, bundled_scenarios, load_scenario

__all__ = [
    "CriteriaEngine",
    "Engine",
    "EngineInfo",
    "EngineKind",
    "EngineRegistry",
    "EngineResult",
    "EngineStatus",
    "ExitCode",
    "LinearPdeEngine",
    "LogPdeEngine",
    "ParticleEngine",
    "RunContext",
    "RunOutcome",
    "Scenario",
    "ScenarioExecutor",
    "SweepOutcome",
    "bundled_scenarios",
    "load_scenario",
]
