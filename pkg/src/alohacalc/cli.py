"""Command-line interface for alohacalc using click."""

import asyncio
import logging
import sys
from pathlib import Path
from typing import Callable, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

from . import __version__
from .core import experiments
from .core.cache import ResultCache
from .core.config import RunConfig
from .core.runner import ExperimentRunner, RunProgress, workers_from_env
from .utils.csv_format import write_csv

console = Console()
err_console = Console(stderr=True)


def _setup_logging(verbose: bool) -> None:
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(message)s",
            handlers=[RichHandler(console=err_console, show_path=False)],
            force=True,
        )


def _fail(error: Exception, verbose: bool) -> None:
    """Print the error for humans and as one machine-readable line, then exit 1."""
    console.print(f"[bold red]Error:[/bold red] {escape(str(error))}")
    if verbose:
        console.print_exception()
    click.echo(f"error: {type(error).__name__}: {error}", err=True)
    sys.exit(1)


def run_options(func: Callable) -> Callable:
    """Options shared by every config-driven command."""
    options = [
        click.argument("config_file", type=click.Path(exists=True, dir_okay=False, path_type=Path)),
        click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path),
                     help="Output CSV (default: <name>-<command>.csv)"),
        click.option("--seed", type=int, default=None, help="Override the config seed"),
        click.option("--set", "overrides", multiple=True, metavar="PATH=VALUE",
                     help="Override a config value (JSONPath; repeatable)"),
        click.option("--workers", "-w", type=int, default=None,
                     help="Worker processes (default: $ALOHACALC_WORKERS or 1)"),
        click.option("--no-cache", is_flag=True, help="Do not read or write the result cache"),
        click.option("--verbose", "-v", is_flag=True, help="Verbose output"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(command: str, config_file: Path, output: Optional[Path], seed: Optional[int], overrides) -> RunConfig:
    overrides = list(overrides)
    if seed is not None:
        overrides.append(f"seed={seed}")
    if output is not None:
        overrides.append(f'output="{output.as_posix()}"')
    return RunConfig.load(config_file, command, overrides)


def _run(command: str, config_file, output, seed, overrides, workers, no_cache, verbose, body) -> None:
    """Load the config, run `body(config, runner, progress)` and report."""
    _setup_logging(verbose)
    try:
        config = _load(command, config_file, output, seed, overrides)
        workers = workers if workers is not None else workers_from_env()
        cache = None if no_cache else ResultCache()

        console.print(f"\n[bold blue]{command}:[/bold blue] {config.name}")
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            console=console,
        ) as progress:
            task = progress.add_task("[cyan]Starting...", total=None)

            def progress_callback(prog: RunProgress):
                if prog.stage == "done":
                    progress.update(task, completed=prog.total, total=prog.total,
                                    description=f"[green]{prog.message}")
                elif prog.total > 0:
                    progress.update(task, completed=prog.current, total=prog.total,
                                    description=f"[cyan]{prog.message}")
                else:
                    progress.update(task, description=f"[cyan]{prog.message}")
                if verbose and prog.message:
                    console.print(f"  [dim]{prog.message}[/dim]")

            runner = ExperimentRunner(config, workers, progress_callback, cache)
            try:
                path = body(config, runner)
            finally:
                if cache:
                    cache.close()
            progress.update(task, description="[green]Done")

        console.print(f"[bold green]Success:[/bold green] {path}")
    except Exception as e:
        _fail(e, verbose)


@click.group(invoke_without_command=True)
@click.pass_context
@click.version_option(version=__version__)
def main(ctx):
    """alohacalc - ALOHA receiver calculus, Poisson receivers and SIC simulation."""
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@main.command()
@run_options
def table(config_file, output, seed, overrides, workers, no_cache, verbose):
    """
    Write the success-function table of a receiver.

    Examples:
        alohacalc table configs/table1.toml
    """
    def body(config: RunConfig, runner: ExperimentRunner) -> Path:
        header, rows = experiments.table_rows(config)
        return write_csv(config.output_path(), header, rows)

    _run("table", config_file, output, seed, overrides, workers, no_cache, verbose, body)


@main.command()
@run_options
def induce(config_file, output, seed, overrides, workers, no_cache, verbose):
    """Write induced Poisson success probabilities over a grid of offered loads."""
    def body(config: RunConfig, runner: ExperimentRunner) -> Path:
        header, rows = experiments.induce_rows(config)
        return write_csv(config.output_path(), header, rows)

    _run("induce", config_file, output, seed, overrides, workers, no_cache, verbose, body)


@main.command()
@run_options
def de(config_file, output, seed, overrides, workers, no_cache, verbose):
    """
    Sweep a user count and write density-evolution error probabilities.

    Examples:
        alohacalc de configs/two-2fold.toml
        alohacalc de configs/two-2fold.toml --set receiver.D=1 --set sweep.slots=256
    """
    def body(config: RunConfig, runner: ExperimentRunner) -> Path:
        values = experiments.sweep_values(config)
        errors = asyncio.run(runner.run_de(values))
        rows = [[v, *e] for v, e in zip(values, errors)]
        header = experiments.error_header(len(config.sweep["users"]))
        return write_csv(config.output_path(), header, rows)

    _run("de", config_file, output, seed, overrides, workers, no_cache, verbose, body)


@main.command()
@run_options
def sim(config_file, output, seed, overrides, workers, no_cache, verbose):
    """
    Sweep a user count and write simulated error rates with standard errors.

    Output is identical for any worker count given the same seed.
    """
    def body(config: RunConfig, runner: ExperimentRunner) -> Path:
        values = experiments.sweep_values(config)
        stats = asyncio.run(runner.run_sim(values))
        rows = [experiments.stats_row(v, s) for v, s in zip(values, stats)]
        header = experiments.error_header(len(config.sweep["users"]), with_std_err=True)
        return write_csv(config.output_path(), header, rows)

    _run("sim", config_file, output, seed, overrides, workers, no_cache, verbose, body)


@main.command()
@run_options
def rayleigh(config_file, output, seed, overrides, workers, no_cache, verbose):
    """Write the Rayleigh capture success probability over a grid of offered loads."""
    def body(config: RunConfig, runner: ExperimentRunner) -> Path:
        header, rows = experiments.rayleigh_rows(config)
        return write_csv(config.output_path(), header, rows)

    _run("rayleigh", config_file, output, seed, overrides, workers, no_cache, verbose, body)


@main.command()
@run_options
def admit(config_file, output, seed, overrides, workers, no_cache, verbose):
    """Find how many users of the swept class keep the target class under its error target."""
    def body(config: RunConfig, runner: ExperimentRunner) -> Path:
        admitted, error = asyncio.run(runner.run_admit())
        k = config.sweep.get("target_class", 1)
        console.print(f"  Admitted: [bold]{admitted}[/bold] users (class {k} error {error:.3e})")
        return write_csv(config.output_path(), ["admitted", f"err_class_{k}"], [[admitted, error]])

    _run("admit", config_file, output, seed, overrides, workers, no_cache, verbose, body)


@main.command()
def clear_cache():
    """Clear the result cache."""
    try:
        cache = ResultCache()
        stats_before = cache.get_stats()
        cache.clear()
        cache.close()

        console.print("[green]Cache cleared successfully![/green]")
        console.print(f"  Removed {stats_before['entry_count']} entries")
        console.print(f"  Freed {stats_before['size_bytes'] / 1024 / 1024:.2f} MB")
    except Exception as e:
        _fail(e, False)


@main.command()
def version():
    """Show version information."""
    console.print(f"alohacalc version {__version__}")


if __name__ == '__main__':
    main()
