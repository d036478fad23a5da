"""mckv - numerical lab for McKean-Vlasov dynamics with hitting-time feedback."""

from mckv.config import Settings, settings
from mckv.core.criteria import Verdict, VerdictKind, blowup_linear, blowup_log, delta_verdict
from mckv.core.model import Density, ModelKind, ModelParams, TimeSeries
from mckv.core.selfsim import SelfSimilar, beta_inf
from mckv.engines import EngineRegistry, ScenarioExecutor, load_scenario
from mckv.particles import cascade_resolve, compare_to_pde, simulate
from mckv.solvers import GridConfig, solve_linear, solve_log

__version__ = "0.1.0"

__all__ = [
    "Density",
    "EngineRegistry",
    "GridConfig",
    "ModelKind",
    "ModelParams",
    "ScenarioExecutor",
    "SelfSimilar",
    "Settings",
    "TimeSeries",
    "Verdict",
    "VerdictKind",
    "beta_inf",
    "blowup_linear",
    "blowup_log",
    "cascade_resolve",
    "compare_to_pde",
    "delta_verdict",
    "load_scenario",
    "settings",
    "simulate",
    "solve_linear",
    "solve_log",
]
