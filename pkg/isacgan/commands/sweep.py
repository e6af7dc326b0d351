# isacgan/commands/sweep.py
"""
ISACGAN - Parameter sweep command (NMSE versus M or N)
"""
import traceback

from rich.table import Table

from isacgan import pipeline
from isacgan.errors import IsacganError
from isacgan.reports import write_nmse_report
from isacgan.utils import linear_to_db, make_progress, print_error


def run(console, run_config) -> bool:
    variable = run_config.sweep_variable
    values = run_config.sweep_values
    console.print(f"\n[bold green]===[/bold green] NMSE versus {variable} ({run_config.link_tag}) "
                  f"[bold green]===[/bold green]")
    console.print(f"[*] {variable} in {list(values)}, SNR levels {list(run_config.sweep_snr_db)} dB; "
                  f"each value regenerates data and retrains every model\n")
    path = pipeline.Artifacts.of(run_config).sweep

    try:
        with make_progress(console) as progress:
            task = progress.add_task(f"Sweeping {variable}", total=len(values))
            report = pipeline.sweep(run_config, on_value=lambda value: progress.advance(task))
        write_nmse_report(report, path, {**pipeline.provenance(run_config), "trials": run_config.trials})
    except IsacganError as e:
        print_error(f"Sweep failed: {e}", console)
        return False
    except Exception as e:
        print_error(f"An unexpected error occurred during the sweep: {e}", console)
        traceback.print_exc()
        return False

    frame = report.frame()
    table = Table(title=f"NMSE (dB) versus {variable}")
    table.add_column(variable, style="cyan", justify="right")
    table.add_column("SNR (dB)", style="cyan", justify="right")
    table.add_column("Method", style="white")
    table.add_column("NMSE (dB)", style="green", justify="right")
    for row in frame.itertuples(index=False):
        table.add_row(f"{row.sweep_value:g}", f"{row.snr_db:g}", row.method, f"{linear_to_db(row.nmse):.2f}")
    console.print(table)
    console.print(f"[dim]-- Report -> {path}[/dim]")
    return True
