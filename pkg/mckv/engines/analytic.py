"""Criteria engine: closed-form blow-up and global-solvability verdicts."""

from mckv.core.criteria import RECORD_HEADER, Verdict, blowup_linear, blowup_log, delta_verdict
from mckv.core.model import Density, ModelKind
from mckv.engines.base import Engine, EngineInfo, EngineKind, EngineResult, RunContext
from mckv.engines.scenario import Scenario
from mckv.errors import ConfigurationError


def scenario_verdict(scenario: Scenario, base_dir=None) -> Verdict:
    """Evaluate the criteria requested by ``scenario``."""
    params = scenario.params
    request = scenario.criteria
    mu_grid = request.mu_grid if request else None
    spec = scenario.density
    if request and request.delta:
        if spec.kind != "narrow_gaussian" or params.model is not ModelKind.LINEAR:
            raise ConfigurationError("criteria.delta needs linear narrow_gaussian data")
        return delta_verdict(spec.x0, params.alpha)
    start = spec.build(params, base_dir)
    if not isinstance(start, Density):
        raise ConfigurationError("criteria need an analytic or tabulated density")
    if params.model is ModelKind.LINEAR:
        return blowup_linear(start, params.alpha, mu_grid)
    return blowup_log(start, params.alpha, params.beta, mu_grid)


class CriteriaEngine(Engine):
    """Moment criteria on the initial density."""

    def get_info(self) -> EngineInfo:
        return EngineInfo(
            name="criteria",
            kind=EngineKind.ANALYTIC,
            description="Exponential-moment and partial-mass criteria on p0/q0",
            models=("linear", "log"),
            parallel=False,
            capacity=None,
        )

    def is_available(self) -> bool:
        return True

    def get_availability_reason(self) -> str:
        return "Closed-form checks, always available"

    def applies(self, scenario: Scenario) -> bool:
        return scenario.criteria is not None

    def execute(self, scenario: Scenario, ctx: RunContext) -> EngineResult:
        verdict = scenario_verdict(scenario, ctx.base_dir)
        path = ctx.out_dir / "criteria.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{RECORD_HEADER}\n{verdict.to_record()}\n")
        return EngineResult(
            engine="criteria",
            kind=EngineKind.ANALYTIC,
            verdict=verdict,
            metrics={"T_bound": verdict.T_bound, "margin": verdict.margin},
            artifacts=path,
        )
