"""Finite-difference engines for the two Fokker-Planck equations."""

import numpy as np

from mckv.core.model import Density, ModelKind
from mckv.core.selfsim import SelfSimilarStart
from mckv.engines.base import Engine, EngineInfo, EngineKind, EngineResult, RunContext
from mckv.engines.scenario import Scenario
from mckv.errors import ConfigurationError
from mckv.solvers import fp_linear, fp_log
from mckv.solvers.fp_log import lambda_l2_budget, survival_rate_bound

FLUX_WINDOW_START = 0.01


class LinearPdeEngine(Engine):
    """Free-boundary solver for linear feedback."""

    def get_info(self) -> EngineInfo:
        return EngineInfo(
            name="fp-linear",
            kind=EngineKind.PDE,
            description="Implicit diffusion / explicit drift solver for p, N and s",
            models=("linear",),
            parallel=False,
            capacity=None,
        )

    def is_available(self) -> bool:
        return True

    def get_availability_reason(self) -> str:
        return "numpy/scipy solver, always available"

    def applies(self, scenario: Scenario) -> bool:
        return scenario.grid is not None and scenario.model.kind is ModelKind.LINEAR

    def execute(self, scenario: Scenario, ctx: RunContext) -> EngineResult:
        params = scenario.params
        start = scenario.density.build(params, ctx.base_dir)
        sol = fp_linear.solve_linear(start, params, scenario.T, scenario.grid)

        metrics: dict[str, float | None] = {
            "steps": sol.steps,
            "mass_ledger_error": fp_linear.mass_ledger_error(sol),
            "max_jump_indicator": float(np.max(sol.jump.values)),
            "final_loss": sol.s.final,
        }
        if isinstance(start, SelfSimilarStart):
            exact = start.exact_loss(sol.times)
            metrics["loss_error"] = float(np.max(np.abs(sol.s.values - exact)))
        elif sol.blowup is None:
            late = sol.times >= FLUX_WINDOW_START
            if late.any():
                scaled = sol.N.values[late] * np.sqrt(sol.times[late])
                metrics["max_scaled_flux"] = float(np.max(scaled))

        out = fp_linear.write_run(sol, ctx.out_dir / "fp_linear", {"scenario": scenario.name})
        stop = sol.blowup
        return EngineResult(
            engine="fp-linear",
            kind=EngineKind.PDE,
            blowup=stop is not None and stop.is_blowup,
            event_time=None if stop is None else stop.time,
            trigger=None if stop is None else stop.trigger.value,
            series=sol.s,
            resolution={"h": sol.h, "dt": scenario.grid.dt},
            metrics=metrics,
            artifacts=out,
        )


class LogPdeEngine(Engine):
    """Normalized solver for log feedback with the lambda budget."""

    def get_info(self) -> EngineInfo:
        return EngineInfo(
            name="fp-log",
            kind=EngineKind.PDE,
            description="Solver for r, lambda and qbar with entropy functionals",
            models=("log",),
            parallel=False,
            capacity=None,
        )

    def is_available(self) -> bool:
        return True

    def get_availability_reason(self) -> str:
        return "numpy/scipy solver, always available"

    def applies(self, scenario: Scenario) -> bool:
        return scenario.grid is not None and scenario.model.kind is ModelKind.LOG

    def execute(self, scenario: Scenario, ctx: RunContext) -> EngineResult:
        params = scenario.params
        start = scenario.density.build(params, ctx.base_dir)
        if not isinstance(start, Density):
            raise ConfigurationError("density.kind: fp-log needs a density")
        sol = fp_log.solve_log(start, params, scenario.T, scenario.grid)
        budget = lambda_l2_budget(sol)

        metrics = {
            "steps": sol.steps,
            "lambda_l2_slope": budget.slope,
            "lambda_l2_residual": budget.residual,
            "affine_constant": budget.affine_constant,
            "affine_excess": budget.affine_excess,
            "survival_rate_bound": survival_rate_bound(budget),
            "max_mass_drift": sol.max_mass_drift,
            "max_I": float(np.max(sol.I.values)),
            "final_survival": sol.qbar.final,
        }
        out = fp_log.write_run(sol, ctx.out_dir / "fp_log", {"scenario": scenario.name})
        stop = sol.blowup
        return EngineResult(
            engine="fp-log",
            kind=EngineKind.PDE,
            blowup=stop is not None and stop.is_blowup,
            event_time=None if stop is None else stop.time,
            trigger=None if stop is None else stop.trigger.value,
            series=sol.qbar,
            resolution={"h": scenario.grid.h, "dt": scenario.grid.dt},
            metrics=metrics,
            artifacts=out,
        )
