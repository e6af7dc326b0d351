# isacgan/commands/complexity.py
"""
ISACGAN - Complexity report command

Closed-form versus counted real additions / multiplications for the
SE-CGAN (versus M) and the CE-CGAN (versus N), with the FFN benchmark and
the reduction ratios.
"""
import traceback

from rich.table import Table

from isacgan import pipeline
from isacgan.complexity import complexity_report
from isacgan.errors import IsacganError
from isacgan.reports import write_complexity_report
from isacgan.utils import print_error


def run(console, run_config) -> bool:
    console.print(f"\n[bold green]===[/bold green] Computational Complexity [bold green]===[/bold green]")
    system = run_config.system
    path = run_config.path("complexity.csv")

    try:
        report = complexity_report(system.M, system.N, run_config.complexity_m_values,
                                   run_config.complexity_n_values)
        write_complexity_report(report, path, pipeline.provenance(run_config))
    except IsacganError as e:
        print_error(f"Complexity analysis failed: {e}", console)
        return False
    except Exception as e:
        print_error(f"An unexpected error occurred during complexity analysis: {e}", console)
        traceback.print_exc()
        return False

    table = Table(title="Real additions / multiplications")
    table.add_column("Link", style="cyan")
    table.add_column("M", justify="right")
    table.add_column("N", justify="right")
    table.add_column("Part", style="white")
    table.add_column("Closed form", style="green", justify="right")
    table.add_column("Counted", style="green", justify="right")
    table.add_column("Reduction", style="yellow", justify="right")
    for row in report.rows:
        match = "" if row.closed_form == row.counted else " [bold red]![/bold red]"
        table.add_row(row.link, str(row.M), str(row.N), row.part,
                      f"{row.closed_form[0]} / {row.closed_form[1]}",
                      f"{row.counted[0]} / {row.counted[1]}{match}",
                      f"{row.reduction[0]:.1%} / {row.reduction[1]:.1%}")
    console.print(table)

    if report.parity():
        console.print("[bold green]Closed forms match the instrumented counts for every network.[/bold green]")
    else:
        console.print("[bold yellow]Some closed forms differ from the instrumented counts (marked !).[/bold yellow]")
    console.print(f"[dim]-- Report -> {path}[/dim]")
    return True
