"""CLI commands for multirate GARK analysis."""

import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from ..config import LOG_LEVEL
from ..errors import InvalidParameter, MrGarkError
from ..models import Command, ExperimentResult, ExperimentSpec, OutputFormat, Partitioning, SchemeId
from ..services.experiments import run_experiment

app = typer.Typer(
    name="mrgark",
    help="Analyze and run multirate GARK schemes from the terminal.",
    no_args_is_help=True,
)
console = Console()
err_console = Console(stderr=True)

logger = logging.getLogger(__name__)

SchemeFile = typer.Argument(None, help="Tableau JSON file (instead of --scheme)")
SchemeName = typer.Option(None, "--scheme", "-s", help="Catalog scheme name")
MicroSteps = typer.Option(1, "--M", "-M", help="Number of fast micro-steps per macro-step")
Variant = typer.Option(None, "--variant", help="Catalog variant")
Format = typer.Option(OutputFormat.TEXT, "--format", "-f", help="Output: text, json, csv")
Output = typer.Option(None, "--output", "-o", help="Also write the result to this file")


def setup_logging(verbose: bool = False) -> None:
    """Send log records to stderr so stdout carries only reports."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else LOG_LEVEL,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@app.callback()
def callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging on stderr"),
):
    """Multirate GARK toolkit."""
    setup_logging(verbose)


def parse_steps(raw: Optional[str]) -> List[float]:
    if not raw:
        return []
    try:
        return [float(h) for h in raw.split(",") if h.strip()]
    except ValueError:
        raise InvalidParameter(f"cannot parse step sizes '{raw}'") from None


def yes_no(flag: Optional[bool]) -> str:
    if flag is None:
        return "[dim]n/a[/dim]"
    return "[green]yes[/green]" if flag else "[red]no[/red]"


def fmt_float(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.6g}"


def fail(exc: MrGarkError) -> None:
    """Print machine-readable error JSON and exit with the error's status."""
    logger.error("%s: %s", exc.code, exc.message)
    typer.echo(json.dumps(exc.to_dict(), default=str))
    raise typer.Exit(exc.exit_code)


def emit_csv(rows: List[Dict[str, Any]]) -> None:
    if not rows:
        return
    writer = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def flatten_payload(payload: Dict[str, Any], prefix: str = "") -> List[Dict[str, Any]]:
    """key,value rows for payloads without a natural table."""
    rows = []
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(flatten_payload(value, f"{name}."))
        elif not isinstance(value, list):
            rows.append({"key": name, "value": value})
    return rows


def execute(
    command: Command,
    fmt: OutputFormat,
    render: Callable[[ExperimentResult], None],
    scheme: Optional[str] = None,
    M: int = 1,
    variant: Optional[str] = None,
    **fields: Any,
) -> None:
    """Build the experiment, run it and print the result in the requested format."""
    try:
        spec = ExperimentSpec(
            command=command,
            scheme=SchemeId(name=scheme, M=M, variant=variant) if scheme else None,
            format=fmt,
            **fields,
        )
        result = run_experiment(spec)
    except MrGarkError as exc:
        fail(exc)
    except ValidationError as exc:
        fail(InvalidParameter("invalid arguments", errors=exc.errors(include_url=False, include_context=False)))
    except OSError as exc:
        fail(InvalidParameter(f"I/O error: {exc}"))

    if fmt is OutputFormat.JSON:
        typer.echo(json.dumps(result.payload, indent=2, default=str))
    elif fmt is OutputFormat.CSV:
        emit_csv(result.rows or flatten_payload(result.payload))
    else:
        render(result)
    for artifact in result.artifacts:
        err_console.print(f"[dim]Wrote {artifact}[/dim]")
    if result.exit_code:
        raise typer.Exit(result.exit_code)


def render_check(result: ExperimentResult) -> None:
    p = result.payload
    console.print(f"\n[bold]{p['scheme']}[/bold] (M={p['M']})")
    console.print(f"[dim]{'─' * 60}[/dim]")
    if p.get("structure_tag"):
        console.print(f"[cyan]Structure:[/cyan] {p['structure_tag']}")
    console.print(f"[cyan]Order:[/cyan] {p['classified_order']}")
    if p.get("expected_order") is not None:
        console.print(f"[cyan]Expected order:[/cyan] {p['expected_order']}")
    console.print(f"[cyan]Internally consistent:[/cyan] {yes_no(p.get('internally_consistent'))}")

    stab = p["stability"]
    console.print(f"[cyan]Algebraically stable:[/cyan] {yes_no(stab['algebraically_stable'])}")
    console.print(f"[cyan]Stability-decoupled:[/cyan] {yes_no(stab['stability_decoupled'])}")
    console.print(f"[cyan]Min eigenvalue of P:[/cyan] {fmt_float(stab['min_eigenvalue'])}")
    mono = p["monotonicity"]
    console.print(f"[cyan]A.m. radius:[/cyan] {fmt_float(mono['radius'])}")

    table = Table(show_header=True, header_style="bold")
    table.add_column("Condition", width=22)
    table.add_column("Order", width=5)
    table.add_column("Residual", width=12)
    table.add_column("", width=6)
    for report in p["order"]:
        for r in report["residuals"]:
            ok = r["residual"] <= report["tolerance"]
            mark = "[dim]diag[/dim]" if r["diagnostic"] else ("[green]ok[/green]" if ok else "[red]fail[/red]")
            table.add_row(r["id"], str(r["order"]), f"{r['residual']:.2e}", mark)
    console.print(table)
    for note in p.get("notes", []):
        console.print(f"[dim]{note}[/dim]")


def render_converge(result: ExperimentResult) -> None:
    table = Table(show_header=True, header_style="bold")
    table.add_column("H", width=12)
    table.add_column("Error", width=14)
    for row in result.rows:
        table.add_row(f"{row['H']:g}", f"{row['error']:.3e}")
    console.print(table)
    console.print(f"[cyan]Observed order:[/cyan] {result.payload['slope']:.3f}")


def render_stability(result: ExperimentResult) -> None:
    p = result.payload
    console.print(f"[cyan]Partitioning:[/cyan] {p['partitioning']}")
    console.print(f"[cyan]Algebraically stable:[/cyan] {yes_no(p['algebraically_stable'])}")
    console.print(f"[cyan]Stability-decoupled:[/cyan] {yes_no(p['stability_decoupled'])}")
    console.print(f"[cyan]Base methods stable:[/cyan] {yes_no(p.get('bases_stable'))}")
    console.print(f"[cyan]Min eigenvalue of P:[/cyan] {fmt_float(p['min_eigenvalue'])}")
    console.print(f"[cyan]Conditional weight r:[/cyan] {fmt_float(p.get('conditional_r'))}")
    console.print(f"[cyan]Step bound:[/cyan] {fmt_float(p.get('step_bound'))}")


def render_monotonicity(result: ExperimentResult) -> None:
    p = result.payload
    saturated = " [yellow](saturated)[/yellow]" if p["saturated"] else ""
    console.print(f"[cyan]A.m. radius:[/cyan] {fmt_float(p['radius'])}{saturated}")
    console.print(f"[cyan]Step bound:[/cyan] {fmt_float(p.get('step_bound'))}")
    if p["incidence_verdicts"]:
        table = Table(show_header=True, header_style="bold")
        table.add_column("Incidence condition", width=28)
        table.add_column("Holds", width=6)
        for key, ok in p["incidence_verdicts"].items():
            table.add_row(key, yes_no(ok))
        console.print(table)


def render_integrate(result: ExperimentResult) -> None:
    p = result.payload
    console.print(f"[cyan]Steps:[/cyan] {p['steps']} of H={p['H']:g}")
    console.print(f"[cyan]Final state:[/cyan] {', '.join(f'{v:.10g}' for v in p['final'])}")
    if "error" in p:
        console.print(f"[cyan]Error vs exact:[/cyan] {p['error']:.3e}")
    stats = p["stats"]
    console.print(
        f"[dim]slow RHS {stats['rhs_slow_evals']} | fast RHS {stats['rhs_fast_evals']} | "
        f"Newton iterations {stats['newton_iters']}[/dim]"
    )


def render_list(result: ExperimentResult) -> None:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Scheme", width=20)
    table.add_column("Order", width=5)
    table.add_column("Variants", width=18)
    table.add_column("Summary", width=50)
    for row in result.payload["schemes"]:
        table.add_row(row["name"], str(row["expected_order"]), ", ".join(row["variants"]) or "-", row["summary"])
    console.print(table)
    console.print(f"\n[dim]Base methods: {', '.join(result.payload['bases'])}[/dim]")
    console.print(f"[dim]Problems: {', '.join(p['name'] for p in result.payload['problems'])}[/dim]")


def render_export(result: ExperimentResult) -> None:
    typer.echo(json.dumps(result.payload, indent=2))


@app.command()
def check(
    scheme_file: Optional[Path] = SchemeFile,
    scheme: Optional[str] = SchemeName,
    M: int = MicroSteps,
    variant: Optional[str] = Variant,
    partitioning: Optional[Partitioning] = typer.Option(
        None, "--partitioning", help="additive or component (default: the catalog entry's, else additive)"
    ),
    rho: Optional[float] = typer.Option(None, "--rho", help="Forward Euler radius for the step bound"),
    mu: Optional[float] = typer.Option(None, "--mu", help="Coercivity constant (negative)"),
    r_max: Optional[float] = typer.Option(None, "--r-max", help="Upper end of the radius search"),
    expect_order: Optional[int] = typer.Option(None, "--expect-order", help="Fail unless the order is at least this"),
    fmt: OutputFormat = Format,
    output: Optional[Path] = Output,
):
    """Order, stability and monotonicity report for one scheme."""
    execute(
        Command.CHECK, fmt, render_check, scheme, M, variant,
        scheme_file=scheme_file, partitioning=partitioning, rho=rho, mu=mu, r_max=r_max,
        expect_order=expect_order, output=output,
    )


@app.command()
def converge(
    scheme_file: Optional[Path] = SchemeFile,
    scheme: Optional[str] = SchemeName,
    M: int = MicroSteps,
    variant: Optional[str] = Variant,
    problem: str = typer.Option(..., "--problem", "-p", help="Registered problem name"),
    steps: str = typer.Option(..., "--H", help="Comma-separated macro-step sizes"),
    t_end: float = typer.Option(1.0, "--t-end", help="Final time"),
    expect_order: Optional[int] = typer.Option(None, "--expect-order", help="Fail unless the slope reaches this"),
    fmt: OutputFormat = Format,
    output: Optional[Path] = Output,
):
    """Final-time errors over a list of step sizes and the fitted slope."""
    try:
        H_list = parse_steps(steps)
    except MrGarkError as exc:
        fail(exc)
    execute(
        Command.CONVERGE, fmt, render_converge, scheme, M, variant,
        scheme_file=scheme_file, problem=problem, H_list=H_list, t_end=t_end,
        expect_order=expect_order, output=output,
    )


@app.command()
def stability(
    scheme_file: Optional[Path] = SchemeFile,
    scheme: Optional[str] = SchemeName,
    M: int = MicroSteps,
    variant: Optional[str] = Variant,
    partitioning: Optional[Partitioning] = typer.Option(
        None, "--partitioning", help="additive or component (default: the catalog entry's, else additive)"
    ),
    mu: Optional[float] = typer.Option(None, "--mu", help="Coercivity constant (negative)"),
    problem: Optional[str] = typer.Option(None, "--problem", "-p", help="Take mu from this problem"),
    r_max: Optional[float] = typer.Option(None, "--r-max", help="Upper end of the weight search"),
    fmt: OutputFormat = Format,
    output: Optional[Path] = Output,
):
    """Algebraic stability verdicts."""
    execute(
        Command.STABILITY, fmt, render_stability, scheme, M, variant,
        scheme_file=scheme_file, partitioning=partitioning, mu=mu, problem=problem,
        r_max=r_max, output=output,
    )


@app.command()
def monotonicity(
    scheme_file: Optional[Path] = SchemeFile,
    scheme: Optional[str] = SchemeName,
    M: int = MicroSteps,
    variant: Optional[str] = Variant,
    rho: Optional[float] = typer.Option(None, "--rho", help="Forward Euler radius for the step bound"),
    problem: Optional[str] = typer.Option(None, "--problem", "-p", help="Take rho from this problem"),
    r_max: Optional[float] = typer.Option(None, "--r-max", help="Upper end of the radius search"),
    fmt: OutputFormat = Format,
    output: Optional[Path] = Output,
):
    """Absolute monotonicity radius and incidence conditions."""
    execute(
        Command.MONOTONICITY, fmt, render_monotonicity, scheme, M, variant,
        scheme_file=scheme_file, rho=rho, problem=problem, r_max=r_max, output=output,
    )


@app.command()
def integrate(
    scheme_file: Optional[Path] = SchemeFile,
    scheme: Optional[str] = SchemeName,
    M: int = MicroSteps,
    variant: Optional[str] = Variant,
    problem: str = typer.Option(..., "--problem", "-p", help="Registered problem name"),
    step: float = typer.Option(..., "--H", help="Macro-step size"),
    t_end: float = typer.Option(1.0, "--t-end", help="Final time"),
    micro: bool = typer.Option(False, "--micro", help="Record micro-step states"),
    fmt: OutputFormat = Format,
    output: Optional[Path] = Output,
):
    """Integrate a registered problem with fixed macro-steps."""
    execute(
        Command.INTEGRATE, fmt, render_integrate, scheme, M, variant,
        scheme_file=scheme_file, problem=problem, H_list=[step], t_end=t_end,
        record_micro=micro, output=output,
    )


@app.command("list")
def list_schemes(
    fmt: OutputFormat = Format,
):
    """List catalog schemes, base methods and problems."""
    execute(Command.LIST, fmt, render_list)


@app.command()
def export(
    scheme: str = typer.Option(..., "--scheme", "-s", help="Catalog scheme name"),
    M: int = MicroSteps,
    variant: Optional[str] = Variant,
    output: Optional[Path] = Output,
):
    """Dump a catalog scheme in the tableau file format."""
    execute(Command.EXPORT, OutputFormat.JSON, render_export, scheme, M, variant, output=output)


def main():
    """Entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
