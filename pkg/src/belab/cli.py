"""Command-line interface: belab run | tables | horizon."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from belab.config import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_HYPOTHESIS_VIOLATION,
    EXIT_OK,
    EXIT_SOLVER_FAILURE,
    SUITES,
    TABLE_SAMPLES,
)
from belab.errors import (
    BelabError,
    ConfigError,
    ConvergenceError,
    DomainError,
    EnumerationOverflow,
    HypothesisViolation,
    IntegrationError,
    LevelSetError,
    MultiplicityError,
    SingularMetricError,
    SolverError,
)

console = Console()
err_console = Console(stderr=True)

EXIT_CODES: tuple[tuple[tuple[type[BaseException], ...], int], ...] = (
    ((ConfigError, DomainError, SingularMetricError), EXIT_CONFIG_ERROR),
    ((HypothesisViolation,), EXIT_HYPOTHESIS_VIOLATION),
    ((SolverError, IntegrationError, ConvergenceError, MultiplicityError, LevelSetError, EnumerationOverflow),
     EXIT_SOLVER_FAILURE),
)


def exit_code_for(exc: BaseException) -> int:
    for kinds, code in EXIT_CODES:
        if isinstance(exc, kinds):
            return code
    return EXIT_SOLVER_FAILURE


def setup_logging(verbose: bool = False) -> None:
    logger = logging.getLogger("belab")
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        logger.addHandler(RichHandler(console=err_console, show_path=False, rich_tracebacks=False))


# ── run ──────────────────────────────────────────────────────────────────────
def print_suites() -> None:
    from belab.runner.scenarios import list_checks

    table = Table(title="Suites and checks")
    table.add_column("Suite", style="cyan")
    table.add_column("Check", style="bold")
    table.add_column("Description", style="dim")
    for check in list_checks():
        table.add_row(check["suite"], check["name"], check["description"])
    console.print(table)
    console.print(f"[dim]suite 'all' runs {len(SUITES['all'])} checks[/dim]")


def print_run_summary(result) -> None:
    table = Table(title=f"{result.config.scenario} on {result.config.manifold} (seed {result.seed})")
    table.add_column("", width=2)
    table.add_column("Check", style="bold")
    table.add_column("lhs", justify="right")
    table.add_column("rhs", justify="right")
    table.add_column("Margin", justify="right")
    for report in result.reports:
        style = "green" if report.passed else "red"
        table.add_row(
            report.verdict.emoji,
            report.check_name,
            _short(report.lhs),
            _short(report.rhs),
            f"[{style}]{report.margin:+.3e}[/{style}]",
        )
    console.print(table)
    failed = sum(not r.passed for r in result.reports)
    verdict = "[bold green]all checks passed[/bold green]" if failed == 0 else f"[bold red]{failed} failed[/bold red]"
    console.print(Panel.fit(f"{verdict}\n[dim]reports and manifest in {result.out_dir}[/dim]", border_style="cyan"))


def _short(value) -> str:
    if isinstance(value, (int, float)):
        return f"{value:.6g}"
    return f"[{len(value)} values]"


def cmd_run(args: argparse.Namespace) -> int:
    from belab.runner.engine import run_checks
    from belab.runner.settings import load_config, resolve_seed

    if args.list_suites:
        print_suites()
        return EXIT_OK
    if args.config is None:
        raise ConfigError("a config file is required unless --list-suites is given")
    config = load_config(args.config)
    seed = resolve_seed(config)
    result = run_checks(config, seed, jobs=args.jobs, out_dir=args.out, show_progress=not args.quiet)
    if not args.quiet:
        print_run_summary(result)
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


# ── tables ───────────────────────────────────────────────────────────────────
def cmd_tables(args: argparse.Namespace) -> int:
    from belab.runner.tables import model_table, write_table

    df = model_table(args.d, args.lam, args.r, samples=args.samples)
    path = write_table(df, args.out)
    if not args.quiet:
        console.print(f"[green]wrote {len(df)} rows to {path}[/green]")
    return EXIT_OK


# ── horizon ──────────────────────────────────────────────────────────────────
def cmd_horizon(args: argparse.Namespace) -> int:
    from belab.topology.horizon import horizon_report, load_horizon_hypotheses

    report = horizon_report(load_horizon_hypotheses(args.file))
    if args.json is not None:
        out = Path(args.json)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report.to_json() + "\n")
    if not args.quiet:
        console.print(report.to_table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="belab", description="Bakry-Emery geometry laboratory")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")
    parser.add_argument("--quiet", "-q", action="store_true", help="No console tables or progress bars")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to run")

    run_parser = subparsers.add_parser("run", help="Run a check or suite from a TOML config")
    run_parser.add_argument("config", nargs="?", type=Path, help="Run configuration (TOML)")
    run_parser.add_argument("--jobs", "-j", type=int, default=1, help="Checks run concurrently (default: 1)")
    run_parser.add_argument("--out", type=Path, default=None, help="Output directory (default: config output_dir)")
    run_parser.add_argument("--list-suites", action="store_true", help="List suites and checks and exit")
    run_parser.set_defaults(handler=cmd_run)

    tables_parser = subparsers.add_parser("tables", help="Write model-space rho, l, Hbar, G columns as CSV")
    tables_parser.add_argument("--d", type=float, required=True, help="Model dimension")
    tables_parser.add_argument("--lambda", dest="lam", type=float, required=True, help="Model curvature")
    tables_parser.add_argument("--r", type=float, required=True, help="Green barrier radius")
    tables_parser.add_argument("--out", type=Path, required=True, help="CSV file to write")
    tables_parser.add_argument("--samples", type=int, default=TABLE_SAMPLES,
                               help=f"Rows, rho = r k / samples (default: {TABLE_SAMPLES})")
    tables_parser.set_defaults(handler=cmd_tables)

    horizon_parser = subparsers.add_parser("horizon", help="Topology report for a horizon cross-section")
    horizon_parser.add_argument("file", type=Path, help="Horizon hypotheses (TOML)")
    horizon_parser.add_argument("--json", type=Path, default=None, help="Also write the report as JSON")
    horizon_parser.set_defaults(handler=cmd_horizon)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.handler(args)
    except BelabError as exc:
        code = exit_code_for(exc)
        err_console.print(f"[bold red]belab {args.command}:[/bold red] {type(exc).__name__}: {escape(str(exc))}",
                          highlight=False)
        return code
    except ValueError as exc:
        err_console.print(f"[bold red]belab {args.command}:[/bold red] {escape(str(exc))}", highlight=False)
        return EXIT_CONFIG_ERROR
