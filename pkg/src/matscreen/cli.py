"""
Command-line interface for the matscreen workflows.

This CLI provides subcommands for:
- `sol27lc`: lattice constants of one solid or of the whole benchmark set
- `adsorption`: most favorable fcc/ontop adsorption configurations and their difference
- `beef`: ensemble uncertainty of that difference
- `canvas`: print a saved canvas or its change log
- `validate`: check the shipped fixture library and cluster config

Usage:
    # Show help
    matscreen --help

    # One solid
    matscreen sol27lc Li bcc 3.451

    # Whole benchmark set, reports under ./reports
    matscreen sol27lc --all --out reports

    # CO on Pt(111) with PBE
    matscreen adsorption Pt 111 CO --xc PBE

    # Inspect the canvas of a finished run
    matscreen canvas dump matscreen-runs/lattice-Li-bcc/canvas.snapshot

Exit codes: 0 success, 1 validation failure or missed benchmark (sol27lc --all),
2 plan failure, 3 unresolved convergence, 64 usage error (unknown lattice,
element or system), 65 corrupt snapshot, 66 missing snapshot or data file.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum
from pathlib import Path

import typer
from pydantic import ValidationError

from .canvas import Canvas, CanvasStats
from .config import DEFAULT_WORKDIR, WORKDIR_ENVVAR, RunConfig
from .errors import (
    CorruptSnapshot,
    ElementNotInCatalog,
    FixtureNotFound,
    LoopLimitExceeded,
    MatscreenError,
    NoConvergedValue,
    UnknownLattice,
    UnsupportedFacet,
)
from .pipelines import run_adsorption, run_beef, run_lattice, run_sol27
from .reports import (
    format_adsorption_report,
    format_beef_report,
    format_lattice_report,
    write_adsorption_report,
    write_beef_report,
    write_lattice_report,
)
from .surrogate import load_fixture_library
from .validation import check_benchmark, validate_installation

EXIT_VALIDATION = 1
EXIT_PLAN_FAILED = 2
EXIT_UNCONVERGED = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NO_INPUT = 66

app = typer.Typer(
    name="matscreen",
    help="Autonomous DFT screening workflows on a simulated cluster.",
    add_completion=False,
)


def exit_code_for(error: BaseException) -> int:
    """Exit code for a terminal workflow error."""
    if isinstance(error, (UnknownLattice, ElementNotInCatalog, FixtureNotFound, UnsupportedFacet)):
        return EXIT_USAGE
    if isinstance(error, (LoopLimitExceeded, NoConvergedValue)):
        return EXIT_UNCONVERGED
    if isinstance(error, CorruptSnapshot):
        return EXIT_DATA
    return EXIT_PLAN_FAILED


@contextmanager
def _workflow_errors() -> Iterator[None]:
    try:
        yield
    except MatscreenError as e:
        typer.echo(f"Error: {type(e).__name__}: {e}", err=True)
        raise typer.Exit(code=exit_code_for(e)) from e


def _config(
    workdir: Path,
    seed: int,
    repair_rounds: int,
    threshold: float,
    members: int = 2000,
    cluster: Path | None = None,
    fixtures: Path | None = None,
) -> RunConfig:
    data_files = {"cluster_config": cluster, "fixture_library": fixtures}
    for path in data_files.values():
        if path is not None and not path.is_file():
            typer.echo(f"Error: file not found: {path}", err=True)
            raise typer.Exit(code=EXIT_NO_INPUT)
    try:
        return RunConfig(
            workdir=workdir,
            seed=seed,
            repair_round_limit=repair_rounds,
            convergence_threshold=threshold,
            ensemble_members=members,
            **{key: path for key, path in data_files.items() if path is not None},
        )
    except ValidationError as e:
        typer.echo(f"Error: invalid settings: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE) from e


def _parse_supercell(text: str) -> tuple[int, int]:
    try:
        p, q = (int(part) for part in text.lower().split("x"))
    except ValueError as e:
        raise typer.BadParameter(f"expected PxQ such as 2x2, got '{text}'") from e
    if p < 1 or q < 1:
        raise typer.BadParameter("supercell sizes must be >= 1")
    return p, q


WORKDIR_OPTION = typer.Option(
    DEFAULT_WORKDIR,
    "--workdir",
    "-w",
    envvar=WORKDIR_ENVVAR,
    help="Root directory for run directories.",
)
SEED_OPTION = typer.Option(42, "--seed", help="Seed of the surrogate backend.")
REPAIR_OPTION = typer.Option(
    3, "--repair-rounds", help="Convergence repair rounds allowed before giving up."
)
THRESHOLD_OPTION = typer.Option(
    1.0, "--threshold", help="Convergence threshold for cutoff and k-spacing, meV/atom."
)
CLUSTER_OPTION = typer.Option(
    None, "--cluster", help="Cluster config INI file (default: packaged)."
)
FIXTURES_OPTION = typer.Option(
    None, "--fixtures", help="Surrogate fixture library JSON (default: packaged)."
)


class Functional(str, Enum):
    LDA = "LDA"
    PBE = "PBE"
    BEEF = "BEEF-vdW"


class CanvasView(str, Enum):
    dump = "dump"
    log = "log"


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log workflow progress."),
) -> None:
    """Autonomous DFT screening workflows on a simulated cluster."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


@app.command()
def sol27lc(
    element: str | None = typer.Argument(None, help="Element symbol, e.g. Li."),
    lattice: str | None = typer.Argument(None, help="Lattice, e.g. bcc, fcc, diamond."),
    a: float | None = typer.Argument(None, help="Experimental lattice constant in Angstrom."),
    all_systems: bool = typer.Option(
        False, "--all", help="Run every benchmark solid of the fixture library."
    ),
    out: Path | None = typer.Option(
        None, "--out", "-o", help="Report directory (default: <workdir>/reports)."
    ),
    workdir: Path = WORKDIR_OPTION,
    seed: int = SEED_OPTION,
    repair_rounds: int = REPAIR_OPTION,
    threshold: float = THRESHOLD_OPTION,
    cluster: Path | None = CLUSTER_OPTION,
    fixtures: Path | None = FIXTURES_OPTION,
) -> None:
    """
    Compute lattice constants with convergence tests and an equation-of-state fit.

    Example:
        matscreen sol27lc Li bcc 3.451
        matscreen sol27lc --all
    """
    config = _config(workdir, seed, repair_rounds, threshold, cluster=cluster, fixtures=fixtures)
    with _workflow_errors():
        if all_systems:
            results = run_sol27(config)
        elif element is None or lattice is None or a is None:
            typer.echo("Error: give ELEMENT LATTICE A, or --all", err=True)
            raise typer.Exit(code=EXIT_USAGE)
        else:
            results = [run_lattice(config, element, lattice, a)]

    write_lattice_report(results, out or workdir / "reports")
    typer.echo(format_lattice_report(results), nl=False)
    if all_systems:
        benchmark = check_benchmark(results, load_fixture_library(config.fixture_library))
        typer.echo(benchmark.summary())
        if not benchmark.all_passed:
            raise typer.Exit(code=EXIT_VALIDATION)


@app.command()
def adsorption(
    metal: str = typer.Argument("Pt", help="Substrate metal."),
    facet: str = typer.Argument("111", help="Surface facet (Miller index)."),
    adsorbate: str = typer.Argument("CO", help="Adsorbate formula."),
    xc: Functional = typer.Option(Functional.PBE, "--xc", help="Exchange-correlation functional."),
    supercell: str = typer.Option("2x2", "--supercell", help="Surface supercell as PxQ."),
    out: Path | None = typer.Option(
        None, "--out", "-o", help="Report directory (default: <workdir>/reports)."
    ),
    workdir: Path = WORKDIR_OPTION,
    seed: int = SEED_OPTION,
    repair_rounds: int = REPAIR_OPTION,
    threshold: float = THRESHOLD_OPTION,
    cluster: Path | None = CLUSTER_OPTION,
    fixtures: Path | None = FIXTURES_OPTION,
) -> None:
    """
    Find the most favorable fcc and ontop configurations and their energy difference.

    Failed production jobs go through convergence repair rounds automatically.

    Example:
        matscreen adsorption Pt 111 CO --xc LDA
    """
    cell = _parse_supercell(supercell)
    config = _config(workdir, seed, repair_rounds, threshold, cluster=cluster, fixtures=fixtures)
    with _workflow_errors():
        result = run_adsorption(config, metal, facet, adsorbate, xc.value, cell)
    write_adsorption_report(result, out or workdir / "reports")
    typer.echo(format_adsorption_report(result), nl=False)


@app.command()
def beef(
    metal: str = typer.Argument("Pt", help="Substrate metal."),
    facet: str = typer.Argument("111", help="Surface facet (Miller index)."),
    adsorbate: str = typer.Argument("CO", help="Adsorbate formula."),
    members: int = typer.Option(2000, "--members", "-n", help="Ensemble size."),
    supercell: str = typer.Option("2x2", "--supercell", help="Surface supercell as PxQ."),
    out: Path | None = typer.Option(
        None, "--out", "-o", help="Report directory (default: <workdir>/reports)."
    ),
    workdir: Path = WORKDIR_OPTION,
    seed: int = SEED_OPTION,
    repair_rounds: int = REPAIR_OPTION,
    threshold: float = THRESHOLD_OPTION,
    cluster: Path | None = CLUSTER_OPTION,
    fixtures: Path | None = FIXTURES_OPTION,
) -> None:
    """
    Ensemble statistics of the ontop - fcc binding-energy difference.

    Example:
        matscreen beef Pt 111 CO --members 2000
    """
    cell = _parse_supercell(supercell)
    config = _config(workdir, seed, repair_rounds, threshold, members, cluster, fixtures)
    with _workflow_errors():
        result = run_beef(config, metal, facet, adsorbate, cell)
    write_beef_report(result, out or workdir / "reports")
    typer.echo(format_beef_report(result), nl=False)


@app.command()
def canvas(
    view: CanvasView = typer.Argument(..., help="'dump' for entries, 'log' for the change log."),
    snapshot: Path = typer.Argument(..., help="Canvas snapshot file of a run."),
) -> None:
    """
    Print the entries or the change log of a saved canvas.

    Example:
        matscreen canvas log matscreen-runs/lattice-Li-bcc/canvas.snapshot
    """
    if not snapshot.is_file():
        typer.echo(f"Error: snapshot not found: {snapshot}", err=True)
        raise typer.Exit(code=EXIT_NO_INPUT)
    with _workflow_errors():
        restored = Canvas.restore(snapshot)
    if view is CanvasView.dump:
        typer.echo(restored.dump())
        return
    typer.echo(restored.format_log())
    stats = CanvasStats.from_log(restored.log)
    typer.echo(
        f"writes={stats.writes} overwrites={stats.overwrites} rejected={stats.rejected}"
    )


@app.command()
def validate(
    fixtures: Path | None = typer.Option(
        None, "--fixtures", help="Fixture library to check (default: packaged)."
    ),
    cluster: Path | None = typer.Option(
        None, "--cluster", help="Cluster config to check (default: packaged)."
    ),
) -> None:
    """
    Check the fixture library and cluster config.

    Checks benchmark coverage, reference lattice constants, the adsorption
    energy anchors, the ensemble spread and partition capacity.

    Example:
        matscreen validate
    """
    result = validate_installation(fixtures, cluster)
    typer.echo(result.summary())
    if not result.all_passed:
        raise typer.Exit(code=EXIT_VALIDATION)


if __name__ == "__main__":
    app()
