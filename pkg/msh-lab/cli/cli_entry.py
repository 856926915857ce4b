#!/usr/bin/env python3
"""
m-Subharmonic Weights Lab CLI Entry Point

This module provides the command-line interface of the experiment runner.
Every verification is a subcommand; all of them share the config, output,
thread, seed and format flags.
"""

import logging
from pathlib import Path
from typing import Optional

import click
import typer
from rich.console import Console
from rich.logging import RichHandler

from lab import __version__
from lab.config_loader import RunConfig, load_config, set_nested_value, validate_config
from lab.errors import ConfigError
from lab.exit_handler import ExitCode, get_exit_code_description, handle_exit
from lab.main import ExperimentRunner

# Initialize Typer app and Rich console
app = typer.Typer(
    name="msh-lab",
    help="Numerical laboratory for m-subharmonic weights along submanifolds",
    add_completion=True,
)
console = Console()

# Configure logging with Rich handler
logging.basicConfig(
    level=logging.INFO,
    format="%(message)s",
    handlers=[RichHandler(console=console, rich_tracebacks=True)],
)
logger = logging.getLogger(__name__)

CONFIG_OPTION = typer.Option(
    None,
    "--config",
    "-c",
    help="Run configuration (JSON or YAML)",
    file_okay=True,
    dir_okay=False,
)
OUT_OPTION = typer.Option(None, "--out", "-o", help="Root directory for run reports")
THREADS_OPTION = typer.Option(None, "--threads", "-t", help="Worker threads (results do not depend on it)")
SEED_OPTION = typer.Option(None, "--seed", help="Run seed (unsigned 64-bit)")
FORMAT_OPTION = typer.Option(
    None,
    "--format",
    click_type=click.Choice(["csv", "json", "both"]),
    help="Report format",
)


def version_callback(value: bool) -> None:
    """Display version information and exit."""
    if value:
        console.print(f"[bold blue]msh-lab[/bold blue] version {__version__}")
        console.print("Numerical laboratory for m-subharmonic weights")
        raise typer.Exit(0)


@app.callback()
def configure(
    verbose: int = typer.Option(
        0,
        "--verbose",
        "-v",
        count=True,
        help="Increase verbosity (-v, -vv for more detail)",
    ),
    quiet: bool = typer.Option(
        False,
        "--quiet",
        "-q",
        help="Minimal output (errors only)",
    ),
    no_color: bool = typer.Option(
        False,
        "--no-color",
        help="Disable colored output",
    ),
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit",
    ),
) -> None:
    """Deterministic experiments on m-subharmonic weights, Lelong numbers and relative types."""
    if quiet:
        logging.getLogger().setLevel(logging.ERROR)
    elif verbose == 0:
        logging.getLogger().setLevel(logging.INFO)
    else:
        logging.getLogger().setLevel(logging.DEBUG)
        if verbose >= 2:
            logging.getLogger("lab").setLevel(logging.DEBUG)
    if no_color:
        console.no_color = True


def build_config(
    experiment: str,
    config: Optional[Path],
    out: Optional[Path],
    threads: Optional[int],
    seed: Optional[int],
    fmt: Optional[str],
) -> RunConfig:
    """
    Load the config file and apply command-line overrides.

    Raises:
        ConfigError: naming the offending field
    """
    loaded = load_config(config)
    data = loaded.model_dump(mode="json")
    data["experiment"] = experiment
    overrides = {
        ("output", "directory"): str(out) if out is not None else None,
        ("performance", "threads"): threads,
        ("seed",): seed,
        ("output", "format"): fmt,
    }
    for path, value in overrides.items():
        if value is not None:
            set_nested_value(data, list(path), value)
            logger.debug(f"CLI override: {'.'.join(path)} = {value}")
    return validate_config(data)


def run_experiment(
    experiment: str,
    config: Optional[Path],
    out: Optional[Path],
    threads: Optional[int],
    seed: Optional[int],
    fmt: Optional[str],
) -> None:
    """Load, run, write and exit with the run's code."""
    try:
        logger.info(f"📋 Loading configuration from: {config or 'defaults'}")
        config_obj = build_config(experiment, config, out, threads, seed, fmt)
    except ConfigError as e:
        handle_exit(ExitCode.CONFIG_ERROR, f"Invalid configuration ({e.field}): {e}")

    try:
        runner = ExperimentRunner(config_obj, console=console)
        runner.run()
        runner.write()
        runner.display_summary()
    except KeyboardInterrupt:
        logger.warning("\n⚠️  Operation cancelled by user")
        handle_exit(ExitCode.INTERNAL_ERROR)
    except Exception as e:
        logger.error(f"❌ Unexpected error: {e}")
        logger.debug("Full traceback:", exc_info=True)
        handle_exit(ExitCode.INTERNAL_ERROR)

    code = runner.exit_code()
    handle_exit(code, get_exit_code_description(code))


@app.command("verify-weights")
def verify_weights(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Maximal pole, certified sub/superweights and the radial ODE."""
    run_experiment("verify-weights", config, out, threads, seed, fmt)


@app.command("expansion")
def expansion(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Residual of the scaled Hessian expansion."""
    run_experiment("expansion", config, out, threads, seed, fmt)


@app.command("lelong")
def lelong(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Calibrated Lelong numbers and the sublevel series."""
    run_experiment("lelong", config, out, threads, seed, fmt)


@app.command("reltype")
def reltype(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Relative types from sublevel maxima."""
    run_experiment("reltype", config, out, threads, seed, fmt)


@app.command("localize")
def localize(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Localized weights with a prescribed density along V."""
    run_experiment("localize", config, out, threads, seed, fmt)


@app.command("siu")
def siu(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Constancy of the pointwise ratio along V when k < m."""
    run_experiment("siu", config, out, threads, seed, fmt)


@app.command("compare")
def compare(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Relative type against Lelong number."""
    run_experiment("compare", config, out, threads, seed, fmt)


@app.command("minimal")
def minimal(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Harmonic weight along linear real submanifolds."""
    run_experiment("minimal", config, out, threads, seed, fmt)


@app.command("full-suite")
def full_suite(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
) -> None:
    """Every experiment followed by the infrastructure checks."""
    run_experiment("full-suite", config, out, threads, seed, fmt)


def main() -> None:
    """Console-script entry point."""
    app()


if __name__ == "__main__":
    main()
