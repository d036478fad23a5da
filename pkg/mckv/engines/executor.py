"""Scenario execution: criteria, solver, particles and comparison in order."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Any

from mckv.config import resolve_threads, settings
from mckv.core.artifacts import write_meta, write_table
from mckv.core.criteria import VerdictKind
from mckv.engines.base import EngineKind, EngineResult, RunContext
from mckv.engines.registry import EngineRegistry
from mckv.engines.scenario import Scenario, with_value
from mckv.errors import ConfigurationError, MckvError
from mckv.particles.compare import ComparisonReport, compare_to_pde

logger = logging.getLogger(__name__)

SWEEP_HEADER = ["value", "verdict", "event_time", "sup_error", "lambda_l2_slope", "exit_code"]


class ExitCode(IntEnum):
    """Process exit status of ``run`` and ``sweep``."""

    SUCCESS = 0
    CONFIGURATION = 1
    BLOWUP = 2
    TOLERANCE = 3


@dataclass
class RunOutcome:
    """Everything a scenario run produced."""

    scenario: Scenario
    exit_code: ExitCode
    out_dir: Path
    results: dict[str, EngineResult] = field(default_factory=dict)
    comparison: ComparisonReport | None = None
    failures: list[str] = field(default_factory=list)
    blowup_detected: bool = False
    event_time: float | None = None

    @property
    def verdict(self) -> VerdictKind | None:
        criteria = self.results.get("criteria")
        return criteria.verdict.kind if criteria and criteria.verdict else None

    @property
    def sup_error(self) -> float | None:
        if self.comparison is not None:
            return self.comparison.sup_distance
        for result in self.results.values():
            if "loss_error" in result.metrics:
                return result.metrics["loss_error"]
        return None

    def metric(self, name: str) -> Any:
        for result in self.results.values():
            if name in result.metrics:
                return result.metrics[name]
        return None


@dataclass
class SweepRow:
    value: float
    verdict: str | None
    event_time: float | None
    sup_error: float | None
    lambda_l2_slope: float | None
    exit_code: ExitCode


@dataclass
class SweepOutcome:
    parameter: str
    rows: list[SweepRow]
    path: Path
    exit_code: ExitCode


class ScenarioExecutor:
    """Runs scenarios through the registered engines."""

    def __init__(self, registry: EngineRegistry | None = None) -> None:
        self.registry = registry or EngineRegistry()

    def default_out_dir(self, scenario: Scenario) -> Path:
        return Path(settings.mckv_output_dir) / (scenario.output_dir or scenario.name)

    def run(
        self,
        scenario: Scenario,
        out_dir: Path | None = None,
        threads: int | None = None,
        seed: int | None = None,
        base_dir: Path | None = None,
        only: set[str] | None = None,
    ) -> RunOutcome:
        """Execute the engines the scenario requests and judge the outcome.

        Args:
            scenario: Validated scenario.
            out_dir: Artifact directory; defaults to ``<output dir>/<name>``.
            threads: Worker threads for particle draws.
            seed: Seed for particle runs without their own.
            base_dir: Directory for relative tabulated-density paths.
            only: Restrict to these engine names.

        Returns:
            The outcome; ``exit_code`` is SUCCESS, BLOWUP or TOLERANCE.

        Raises:
            ConfigurationError: If no engine applies, an engine is unknown or
                unavailable, or a comparison lacks one of its series.
        """
        if only is not None:
            unknown = only - set(self.registry.names())
            if unknown:
                msg = f"Unknown engines {sorted(unknown)}. Available: {self.registry.names()}"
                raise ConfigurationError(msg)

        out = out_dir or self.default_out_dir(scenario)
        ctx = RunContext(
            out_dir=out,
            threads=resolve_threads(threads),
            seed=settings.mckv_seed if seed is None else seed,
            base_dir=base_dir,
        )
        outcome = RunOutcome(scenario=scenario, exit_code=ExitCode.SUCCESS, out_dir=out)
        logger.info("Running scenario %s into %s", scenario.name, out)

        for status in self.registry.list_all():
            name = status.info.name
            if (only is not None and name not in only) or not status.engine.applies(scenario):
                continue
            if not status.available:
                raise ConfigurationError(f"Engine {name} unavailable: {status.availability_reason}")
            outcome.results[name] = status.engine.execute(scenario, ctx)
        if not outcome.results:
            raise ConfigurationError(f"Scenario {scenario.name} requests no runnable engine")

        if scenario.expect.compare and (only is None or "particles" in only):
            outcome.comparison = self._compare(scenario, outcome.results)

        self._judge(scenario, outcome)
        self._write_summary(outcome)
        return outcome

    def _compare(self, scenario: Scenario, results: dict[str, EngineResult]) -> ComparisonReport:
        pde = next((r for r in results.values() if r.kind is EngineKind.PDE), None)
        particles = results.get("particles")
        if pde is None or particles is None:
            raise ConfigurationError("expect.compare needs both a grid and particles section")
        return compare_to_pde(
            particles.series,
            pde.series,
            n=int(particles.resolution["n"]),
            h=pde.resolution["h"],
            dt=max(pde.resolution["dt"], particles.resolution["dt"]),
            calibration=scenario.expect.calibration,
        )

    def _judge(self, scenario: Scenario, outcome: RunOutcome) -> None:
        expect = scenario.expect
        dynamic = [r for r in outcome.results.values() if r.kind is not EngineKind.ANALYTIC]
        if dynamic:
            hits = [r for r in dynamic if r.blowup]
            outcome.blowup_detected = bool(hits)
            times = [r.event_time for r in hits if r.event_time is not None]
            outcome.event_time = min(times) if times else None
        else:
            outcome.blowup_detected = outcome.verdict is VerdictKind.BLOWUP

        failures = outcome.failures
        if expect.outcome == "blowup" and not outcome.blowup_detected:
            failures.append("expected a blow-up, none detected")
        if expect.outcome == "regular" and outcome.blowup_detected:
            failures.append(f"unexpected blow-up at t={outcome.event_time}")
        if (
            expect.blowup_before is not None
            and outcome.event_time is not None
            and outcome.event_time >= expect.blowup_before
        ):
            failures.append(
                f"blow-up at t={outcome.event_time:.6g} not before {expect.blowup_before:g}"
            )
        if expect.verdict is not None and outcome.verdict is not expect.verdict:
            got = outcome.verdict.value if outcome.verdict else None
            failures.append(f"verdict {got} instead of {expect.verdict.value}")
        loss_error = outcome.metric("loss_error")
        if expect.loss_error_max is not None and loss_error is not None:
            if loss_error > expect.loss_error_max:
                failures.append(f"loss error {loss_error:.3e} above {expect.loss_error_max:g}")
        if outcome.comparison is not None and not outcome.comparison.passed:
            failures.append(outcome.comparison.summary())

        if failures:
            outcome.exit_code = ExitCode.TOLERANCE
            for failure in failures:
                logger.warning("Scenario %s: %s", scenario.name, failure)
        elif outcome.blowup_detected:
            outcome.exit_code = ExitCode.BLOWUP
        else:
            outcome.exit_code = ExitCode.SUCCESS

    def _write_summary(self, outcome: RunOutcome) -> None:
        engines = {
            name: {
                "blowup": r.blowup,
                "event_time": r.event_time,
                "trigger": r.trigger,
                "verdict": None if r.verdict is None else r.verdict.kind.value,
                "metrics": r.metrics,
            }
            for name, r in outcome.results.items()
        }
        comparison = None
        if outcome.comparison is not None:
            c = outcome.comparison
            comparison = {
                "sup_distance": c.sup_distance,
                "tolerance": c.tolerance,
                "passed": c.passed,
                "window": list(c.window),
            }
        write_meta(
            outcome.out_dir / "summary.json",
            {
                "scenario": outcome.scenario.name,
                "exit_code": int(outcome.exit_code),
                "blowup_detected": outcome.blowup_detected,
                "event_time": outcome.event_time,
                "failures": outcome.failures,
                "engines": engines,
                "comparison": comparison,
            },
        )

    def sweep(
        self,
        scenario: Scenario,
        parameter: str,
        values: list[float],
        out_dir: Path | None = None,
        threads: int | None = None,
        seed: int | None = None,
        base_dir: Path | None = None,
    ) -> SweepOutcome:
        """Run ``scenario`` once per value of the dotted numeric ``parameter``.

        Values run in parallel with one particle thread each. A value whose
        run raises an mckv error gets exit code 1 in its row.

        Raises:
            ConfigurationError: If ``values`` is empty or ``parameter`` is not
                a numeric field.
        """
        if not values:
            raise ConfigurationError("sweep needs at least one value")
        variants = [with_value(scenario, parameter, v) for v in values]
        out = out_dir or self.default_out_dir(scenario)
        workers = min(len(values), resolve_threads(threads))
        logger.info("Sweeping %s over %d values with %d workers", parameter, len(values), workers)

        def one(i: int) -> SweepRow:
            value = values[i]
            try:
                res = self.run(
                    variants[i], out / f"{parameter}_{i:03d}", threads=1, seed=seed, base_dir=base_dir
                )
            except MckvError as e:
                logger.error("%s=%g failed: %s", parameter, value, e)
                return SweepRow(value, None, None, None, None, ExitCode.CONFIGURATION)
            return SweepRow(
                value=value,
                verdict=res.verdict.value if res.verdict else None,
                event_time=res.event_time,
                sup_error=res.sup_error,
                lambda_l2_slope=res.metric("lambda_l2_slope"),
                exit_code=res.exit_code,
            )

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(len(values))))

        path = write_table(
            out / "sweep.csv",
            SWEEP_HEADER,
            [
                [r.value, r.verdict, r.event_time, r.sup_error, r.lambda_l2_slope, int(r.exit_code)]
                for r in rows
            ],
        )
        codes = {r.exit_code for r in rows}
        if ExitCode.CONFIGURATION in codes:
            code = ExitCode.CONFIGURATION
        elif ExitCode.TOLERANCE in codes:
            code = ExitCode.TOLERANCE
        else:
            code = ExitCode.SUCCESS
        return SweepOutcome(parameter, rows, path, code)
