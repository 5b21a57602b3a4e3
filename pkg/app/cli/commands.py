"""
Scenario commands: simulate, schedule, verify and trace.

Exit status: 0 on success, 1 when verification fails or a run breaks, 2 on
usage, parse or validation errors.
"""

import asyncio
from collections.abc import Callable
from contextlib import AbstractContextManager, nullcontext
from enum import Enum
import json
import logging
from pathlib import Path
import time
from typing import Any, NoReturn

from pydantic import ValidationError
from rich.console import Console
import typer

from app.core.config import settings
from app.core.constants import CLI, ExitCode
from app.core.log import logger, setup_logging, suppress_logs
from app.services.coding.errors import CodingError, ScheduleError
from app.services.coding.framing import write_trace
from app.services.coding.schedule import render_grid
from app.services.scenario.errors import ScenarioError
from app.services.scenario.loader import load_scenario
from app.services.scenario.metrics import build_report, report_json, report_tables
from app.services.scenario.models import Scenario, unwrap_validation_error
from app.services.scenario.verification import verify_scenario
from app.services.shared.models import ErrorResponse
from app.services.simnet.errors import ScenarioValidationError, SimulationError
from app.services.simnet.simulator import run

console = Console()


class OutputFormat(str, Enum):
    TABLE = CLI.FORMAT_TABLE
    JSON = CLI.FORMAT_JSON


SCENARIO_ARGUMENT = typer.Argument(
    ...,
    exists=True,
    dir_okay=False,
    readable=True,
    help="Scenario file",
)


def _details(error: Exception) -> dict[str, Any] | None:
    details = {
        name: getattr(error, name)
        for name in ("line", "parameter")
        if getattr(error, name, None) is not None
    }
    return details or None


def _fail(
    error: Exception,
    exit_code: int,
    output_format: OutputFormat,
    location: str | None = None,
) -> NoReturn:
    if output_format is OutputFormat.JSON:
        document = ErrorResponse.from_exception(
            error, exit_code, location=location, details=_details(error)
        )
        typer.echo(document.model_dump_json(indent=2))
    else:
        message = f"{location}: {error}" if location else str(error)
        typer.secho(f"Error: {message}", fg=typer.colors.RED, err=True)
    raise typer.Exit(exit_code)


def _load(path: Path, seed: int | None, output_format: OutputFormat) -> Scenario:
    """Load a scenario and pin its seed: --seed, then the file, then SMATE_SEED."""
    try:
        scenario = load_scenario(path)
    except ScenarioError as e:
        location = f"{path}:{e.line}" if e.line is not None else str(path)
        _fail(e, ExitCode.USAGE_ERROR, output_format, location=location)
    resolved = settings.resolve_seed(seed, scenario.seed)
    return scenario.model_copy(update={"seed": resolved})


def _quiet(quiet: bool) -> AbstractContextManager[None]:
    return suppress_logs(logging.ERROR) if quiet else nullcontext()


def _run_guarded[T](
    output_format: OutputFormat, func: Callable[..., T], *args: Any
) -> T:
    """Map domain errors raised after loading to exit codes."""
    try:
        return func(*args)
    except ValidationError as e:
        _fail(unwrap_validation_error(e), ExitCode.USAGE_ERROR, output_format)
    except (ScheduleError, ScenarioValidationError) as e:
        _fail(e, ExitCode.USAGE_ERROR, output_format)
    except (CodingError, SimulationError) as e:
        logger.error("Run failed", error=str(e))
        _fail(e, ExitCode.VERIFICATION_FAILED, output_format)


def simulate(
    scenario_file: Path = SCENARIO_ARGUMENT,
    out: Path | None = typer.Option(
        None, "--out", "-o", help="Also write the JSON report to this file"
    ),
    seed: int | None = typer.Option(
        None, "--seed", min=0, help="Override the scenario seed"
    ),
    output_format: OutputFormat = typer.Option(
        OutputFormat.TABLE, "--format", "-f", help="Report format"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only print errors"),
) -> None:
    """Run a full simulation and print its metrics report."""
    setup_logging()
    with _quiet(quiet):
        scenario = _load(scenario_file, seed, output_format)
        started = time.perf_counter()
        trace = _run_guarded(output_format, run, scenario)
        runtime = time.perf_counter() - started
        report = build_report(scenario, trace, runtime)

        if out is not None:
            out.write_text(report_json(report), encoding="utf-8")
        if output_format is OutputFormat.JSON:
            typer.echo(report_json(report), nl=False)
        elif not quiet:
            for table in report_tables(report):
                console.print(table)
            if out is not None:
                typer.secho(f"Report written to {out}", dim=True)


def schedule(
    scenario_file: Path = SCENARIO_ARGUMENT,
    cycle: int = typer.Option(
        0, "--cycle", min=0, help="Cycle (session) whose schedule to render"
    ),
    out: Path | None = typer.Option(
        None, "--out", "-o", help="Write the grid to this file instead"
    ),
    output_format: OutputFormat = typer.Option(
        OutputFormat.TABLE, "--format", "-f", help="Grid format"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only print errors"),
) -> None:
    """Print the schedule grid: E for encoded slots, P<ordinal> for plain."""
    setup_logging()
    with _quiet(quiet):
        scenario = _load(scenario_file, None, output_format)
        built = _run_guarded(output_format, scenario.build_schedule, cycle)
        if output_format is OutputFormat.JSON:
            document = {
                "scheme": built.scheme.value,
                "k": built.k,
                "m": built.m,
                "t": built.t,
                "session": built.session,
                "protection_paths": list(built.protection_paths),
                "grid": [
                    [
                        CLI.ENCODED_CELL
                        if slot.is_encoded
                        else f"{CLI.PLAIN_CELL_PREFIX}{slot.data_ordinal}"
                        for slot in row
                    ]
                    for row in built.matrix
                ],
            }
            text = json.dumps(document, indent=2) + "\n"
        else:
            text = render_grid(built)

        if out is not None:
            out.write_text(text, encoding="utf-8")
        else:
            typer.echo(text, nl=False)


def verify(
    scenario_file: Path = SCENARIO_ARGUMENT,
    seed: int | None = typer.Option(
        None, "--seed", min=0, help="Seed for the sweep payloads"
    ),
    output_format: OutputFormat = typer.Option(
        OutputFormat.TABLE, "--format", "-f", help="Result format"
    ),
    out: Path | None = typer.Option(
        None, "--out", "-o", help="Also write the JSON result to this file"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only print errors"),
) -> None:
    """Exhaustively replay the failure patterns the scheme must survive."""
    setup_logging()
    with _quiet(quiet):
        scenario = _load(scenario_file, seed, output_format)
        report = _run_guarded(
            output_format, asyncio.run, verify_scenario(scenario, scenario.seed)
        )
        document = report.model_dump_json(indent=2) + "\n"
        if out is not None:
            out.write_text(document, encoding="utf-8")
        if output_format is OutputFormat.JSON:
            typer.echo(document, nl=False)
        else:
            for check in report.checks:
                color = typer.colors.GREEN if check.ok else typer.colors.RED
                typer.secho(check.render(), fg=color)
                for failure in check.failures:
                    typer.secho(f"  {failure}", fg=typer.colors.RED)

    if not report.passed:
        raise typer.Exit(ExitCode.VERIFICATION_FAILED)


def trace(
    scenario_file: Path = SCENARIO_ARGUMENT,
    out: Path = typer.Option(..., "--out", "-o", help="Trace file to write"),
    seed: int | None = typer.Option(
        None, "--seed", min=0, help="Override the scenario seed"
    ),
    output_format: OutputFormat = typer.Option(
        OutputFormat.TABLE, "--format", "-f", help="Summary format"
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only print errors"),
) -> None:
    """Run the scenario and capture every transmitted frame to a trace file."""
    setup_logging()
    with _quiet(quiet):
        scenario = _load(scenario_file, seed, output_format)
        summary = _run_guarded(output_format, run, scenario)
        written = write_trace(summary.frames, out)
        if output_format is OutputFormat.JSON:
            document = {
                "path": str(out),
                "frames": len(summary.frames),
                "bytes": written,
                "seed": summary.seed,
            }
            typer.echo(json.dumps(document, indent=2))
        elif not quiet:
            typer.echo(f"Wrote {len(summary.frames)} frames ({written} bytes) to {out}")
