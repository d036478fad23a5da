"""Command-line interface for the mckv numerical lab."""

import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from mckv.config import settings
from mckv.engines.executor import ExitCode, RunOutcome, ScenarioExecutor
from mckv.engines.registry import EngineRegistry
from mckv.engines.scenario import CriteriaSpec, Scenario, bundled_scenarios, load_scenario
from mckv.errors import MckvError

app = typer.Typer(
    help="mckv - hitting-time McKean-Vlasov lab: criteria, Fokker-Planck solvers and particles"
)
console = Console()

CONFIG_HELP = "Scenario JSON file or bundled scenario name"


def _setup_logging(level: str | None) -> None:
    """Route library logging through rich at the requested level."""
    logging.basicConfig(
        level=(level or settings.mckv_log_level).upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _load(config: str) -> tuple[Scenario, Path | None]:
    try:
        return load_scenario(config)
    except MckvError as e:
        console.print(f"[red]Configuration error:[/red]\n{e}")
        raise typer.Exit(int(ExitCode.CONFIGURATION))


def _fmt(value: float | None) -> str:
    if value is None:
        return "-"
    return f"{value:.6g}"


def _display_outcome(outcome: RunOutcome) -> None:
    """Show per-engine results and the final status."""
    table = Table(title=f"Scenario {outcome.scenario.name}")
    table.add_column("Engine", style="cyan")
    table.add_column("Kind", style="magenta")
    table.add_column("Result", style="green")
    table.add_column("Event time")
    table.add_column("Notes", style="yellow")

    for name, result in outcome.results.items():
        if result.verdict is not None:
            verdict = result.verdict
            status = verdict.kind.value
            notes = f"T_bound={_fmt(verdict.T_bound)}" if verdict.T_bound else ""
        else:
            status = f"[red]{result.trigger}[/red]" if result.blowup else "completed"
            notes = ", ".join(
                f"{k}={_fmt(v)}" for k, v in result.metrics.items()
                if isinstance(v, float) and k != "seed"
            )
        table.add_row(name, result.kind.value, status, _fmt(result.event_time), notes)
    console.print(table)

    if outcome.comparison is not None:
        console.print(f"[cyan]Comparison:[/cyan] {outcome.comparison.summary()}")
    for failure in outcome.failures:
        console.print(f"[red]✗[/red] {failure}")

    style = {
        ExitCode.SUCCESS: "green",
        ExitCode.BLOWUP: "yellow",
        ExitCode.TOLERANCE: "red",
    }[outcome.exit_code]
    console.print(
        Panel.fit(
            f"exit {int(outcome.exit_code)} ({outcome.exit_code.name.lower()}) - "
            f"artifacts in {outcome.out_dir}",
            border_style=style,
        )
    )


def _execute(
    config: str,
    out: Optional[Path],
    threads: Optional[int],
    seed: Optional[int],
    log_level: Optional[str],
    only: set[str] | None = None,
    force_compare: bool = False,
) -> None:
    _setup_logging(log_level)
    scenario, base_dir = _load(config)
    if only == {"criteria"} and scenario.criteria is None:
        scenario = scenario.model_copy(update={"criteria": CriteriaSpec()})
    if force_compare:
        expect = scenario.expect.model_copy(update={"compare": True})
        scenario = scenario.model_copy(update={"expect": expect})
    try:
        outcome = ScenarioExecutor().run(
            scenario, out_dir=out, threads=threads, seed=seed, base_dir=base_dir, only=only
        )
    except MckvError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(int(ExitCode.CONFIGURATION))
    _display_outcome(outcome)
    raise typer.Exit(int(outcome.exit_code))


ConfigOption = typer.Option(..., "--config", "-c", help=CONFIG_HELP)
OutOption = typer.Option(None, "--out", "-o", help="Artifact directory")
ThreadsOption = typer.Option(None, "--threads", "-t", help="Worker threads (MCKV_THREADS)")
SeedOption = typer.Option(None, "--seed", help="Particle seed (u64)")
LogLevelOption = typer.Option(None, "--log-level", help="Logging level (MCKV_LOG_LEVEL)")


@app.command()
def run(
    config: str = ConfigOption,
    out: Optional[Path] = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Run every component a scenario requests.

    Exit codes: 0 success, 1 configuration error, 2 blow-up detected,
    3 tolerance failure.

    Examples:
        mckv run --config selfsim_oracle
        mckv run --config my_scenario.json --out runs/mine --threads 4
    """
    _execute(config, out, threads, seed, log_level)


@app.command()
def criteria(
    config: str = ConfigOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Evaluate the blow-up and global-solvability criteria only."""
    _execute(config, out, None, None, log_level, only={"criteria"})


@app.command("solve-linear")
def solve_linear(
    config: str = ConfigOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Run the linear-feedback Fokker-Planck solver only."""
    _execute(config, out, None, None, log_level, only={"fp-linear"})


@app.command("solve-log")
def solve_log(
    config: str = ConfigOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Run the log-feedback Fokker-Planck solver only."""
    _execute(config, out, None, None, log_level, only={"fp-log"})


@app.command()
def particles(
    config: str = ConfigOption,
    out: Optional[Path] = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Run the particle system only."""
    _execute(config, out, threads, seed, log_level, only={"particles"})


@app.command()
def compare(
    config: str = ConfigOption,
    out: Optional[Path] = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Run solver and particles and compare their loss or survival series."""
    _execute(
        config, out, threads, seed, log_level,
        only={"fp-linear", "fp-log", "particles"}, force_compare=True,
    )


@app.command()
def sweep(
    config: str = ConfigOption,
    param: str = typer.Option(..., "--param", "-p", help="Dotted numeric field, e.g. model.alpha"),
    values: str = typer.Option(..., "--values", "-v", help="Comma-separated values"),
    out: Optional[Path] = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Run a scenario once per value and write sweep.csv.

    Examples:
        mckv sweep --config delta_alpha_sweep --param model.alpha --values 0.5,1.5,2.5
    """
    _setup_logging(log_level)
    scenario, base_dir = _load(config)
    try:
        parsed = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        console.print(f"[red]Configuration error:[/red] cannot parse values '{values}'")
        raise typer.Exit(int(ExitCode.CONFIGURATION))
    try:
        result = ScenarioExecutor().sweep(
            scenario, param, parsed, out_dir=out, threads=threads, seed=seed, base_dir=base_dir
        )
    except MckvError as e:
        console.print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(int(ExitCode.CONFIGURATION))

    table = Table(title=f"Sweep of {param}")
    for column in ("Value", "Verdict", "Event time", "Sup error", "λ² slope", "Exit"):
        table.add_column(column)
    for row in result.rows:
        table.add_row(
            _fmt(row.value),
            row.verdict or "-",
            _fmt(row.event_time),
            _fmt(row.sup_error),
            _fmt(row.lambda_l2_slope),
            str(int(row.exit_code)),
        )
    console.print(table)
    console.print(f"[green]✓[/green] Wrote {result.path}")
    raise typer.Exit(int(result.exit_code))


@app.command()
def scenarios() -> None:
    """List the bundled scenarios."""
    table = Table(title="Bundled Scenarios")
    table.add_column("Name", style="cyan")
    table.add_column("Model", style="magenta")
    table.add_column("Description")
    for name in bundled_scenarios():
        scenario, _ = load_scenario(name)
        table.add_row(name, scenario.model.kind.value, scenario.description)
    console.print(table)


@app.command()
def engines(
    all_engines: bool = typer.Option(False, "--all", "-a", help="Show all engines"),
) -> None:
    """List scenario engines and their availability."""
    registry = EngineRegistry()
    statuses = registry.list_all() if all_engines else registry.list_available()

    table = Table(title="Engines")
    table.add_column("Name", style="cyan")
    table.add_column("Kind", style="magenta")
    table.add_column("Available", style="green")
    table.add_column("Description")
    table.add_column("Capacity")

    for status in statuses:
        info = status.info
        if status.available:
            available = "[green]Yes[/green]"
        else:
            available = f"[red]No[/red] - {status.availability_reason}"
        capacity = f"{info.capacity:,} particles" if info.capacity else "unlimited"
        table.add_row(info.name, info.kind.value, available, info.description, capacity)

    console.print(table)


def cli() -> None:
    """Entry point for the console script."""
    app()


if __name__ == "__main__":
    cli()
