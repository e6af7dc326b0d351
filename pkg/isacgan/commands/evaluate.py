# isacgan/commands/evaluate.py
"""
ISACGAN - Evaluation command
"""
import traceback

from rich.table import Table

from isacgan import pipeline
from isacgan.errors import IsacganError
from isacgan.reports import write_nmse_report
from isacgan.utils import linear_to_db, make_progress, print_error


def _nmse_table(title: str, report) -> Table:
    frame = report.frame()
    methods = list(dict.fromkeys(frame["method"]))
    table = Table(title=title)
    table.add_column("SNR (dB)", style="cyan", justify="right")
    for method in methods:
        table.add_column(f"{method} NMSE (dB)", style="white", justify="right")
    for value, group in frame.groupby("sweep_value", sort=True):
        by_method = dict(zip(group["method"], group["nmse"]))
        table.add_row(f"{value:g}", *(f"{linear_to_db(by_method[m]):.2f}" for m in methods))
    return table


def run(console, run_config) -> bool:
    """
    Scores every method over the test SNR grid (fresh Monte-Carlo scenarios)
    and on the held-out split, and writes both NMSE reports.
    """
    console.print(f"\n[bold green]===[/bold green] NMSE Evaluation ({run_config.link_tag}) [bold green]===[/bold green]")
    paths = pipeline.Artifacts.of(run_config)

    try:
        models = pipeline.load_models(run_config)
        dataset = pipeline.load_checked_dataset(run_config)
        _, test_raw = pipeline.split_raw(run_config, dataset)
        methods = pipeline.estimators(run_config, models)

        grid = run_config.test_snr_db
        console.print(f"[*] {len(methods)} methods, {len(grid)} SNR points, {run_config.trials} trials each\n")
        with make_progress(console) as progress:
            task = progress.add_task("Monte-Carlo NMSE", total=len(grid))
            grid_report = pipeline.evaluate_grid(run_config, methods, grid, run_config.trials,
                                                 on_point=lambda snr: progress.advance(task))
        split_report = pipeline.evaluate_split(run_config, methods, test_raw)

        provenance = pipeline.provenance(run_config)
        write_nmse_report(grid_report, paths.nmse, {**provenance, "trials": run_config.trials})
        write_nmse_report(split_report, paths.split, {**provenance, "pairs": len(test_raw)})
    except IsacganError as e:
        print_error(f"Evaluation failed: {e}", console)
        return False
    except Exception as e:
        print_error(f"An unexpected error occurred during evaluation: {e}", console)
        traceback.print_exc()
        return False

    console.print(_nmse_table("NMSE versus SNR (Monte-Carlo)", grid_report))
    console.print(f"[dim]-- Report -> {paths.nmse}[/dim]\n")
    console.print(_nmse_table("NMSE on the held-out split", split_report))
    console.print(f"[dim]-- Report -> {paths.split}[/dim]")
    return True
