# isacgan/commands/generate.py
"""
ISACGAN - Dataset generation command
"""
import traceback

from rich.table import Table

from isacgan import pipeline
from isacgan.dataset import pair_dimensions, save_dataset
from isacgan.errors import IsacganError
from isacgan.utils import print_error


def run(console, run_config) -> bool:
    """Generates the training dataset for the configured link and writes it to the output directory."""
    console.print(f"\n[bold green]===[/bold green] Dataset Generation ({run_config.link_tag}) [bold green]===[/bold green]")
    path = pipeline.Artifacts.of(run_config).dataset

    try:
        with console.status("[cyan]Drawing channels and pilot observations...[/cyan]"):
            dataset = pipeline.generate(run_config)
        save_dataset(dataset, path)
    except IsacganError as e:
        print_error(f"Dataset generation failed: {e}", console)
        return False
    except Exception as e:
        print_error(f"An unexpected error occurred during dataset generation: {e}", console)
        traceback.print_exc()
        return False

    input_length, target_length = pair_dimensions(run_config.system, run_config.link)
    table = Table(title="Generated Dataset")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="white")
    table.add_row("Link", run_config.link_tag)
    table.add_row("Pairs", str(len(dataset)))
    table.add_row("Q x V", f"{run_config.Q} x {run_config.V}")
    table.add_row("SNR grid (dB)", ", ".join(f"{s:g}" for s in run_config.train_snr_db))
    table.add_row("Input / target length", f"{input_length} / {target_length}")
    table.add_row("Seed", str(run_config.seed))
    table.add_row("Config hash", run_config.config_hash())
    console.print(table)
    console.print(f"[dim]-- Output file -> {path}[/dim]")
    return True
