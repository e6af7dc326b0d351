# isacgan/commands/train.py
"""
ISACGAN - Training command

Trains the link's CGAN and the FFN / ELM baselines on the training split of
the generated dataset and writes one checkpoint per model.
"""
import traceback

from rich.table import Table

from isacgan import pipeline
from isacgan.errors import IsacganError
from isacgan.utils import make_progress, print_error


def run(console, run_config) -> bool:
    console.print(f"\n[bold green]===[/bold green] Model Training ({run_config.link_tag}) [bold green]===[/bold green]")
    paths = pipeline.Artifacts.of(run_config)
    epochs = run_config.train.epochs

    try:
        dataset = pipeline.load_checked_dataset(run_config)
        train_raw, test_raw = pipeline.split_raw(run_config, dataset)
        console.print(f"[*] Training on [bold]{len(train_raw)}[/bold] pairs "
                      f"([bold]{len(test_raw)}[/bold] held out), {epochs} epochs\n")

        with make_progress(console) as progress:
            cgan_task = progress.add_task(pipeline.CGAN_NAMES[run_config.link], total=epochs)
            ffn_task = progress.add_task("FFN", total=epochs)
            models = pipeline.train_models(
                run_config, train_raw,
                on_epoch=lambda record: progress.advance(cgan_task),
                on_ffn_epoch=lambda record: progress.advance(ffn_task),
            )
        pipeline.save_models(run_config, models)
    except IsacganError as e:
        print_error(f"Training failed: {e}", console)
        return False
    except Exception as e:
        print_error(f"An unexpected error occurred during training: {e}", console)
        traceback.print_exc()
        return False

    history = models.cgan.history
    if history:
        table = Table(title=f"{pipeline.CGAN_NAMES[run_config.link]} Training History")
        table.add_column("Epoch", style="cyan", justify="right")
        table.add_column("L_D", style="yellow")
        table.add_column("L_G", style="yellow")
        table.add_column("Generator MSE", style="green")
        validated = "val_nmse" in history[0]
        if validated:
            table.add_column("Validation NMSE", style="green")
        # first, last and a few in between
        step = max(1, len(history) // 5)
        shown = sorted(set(range(0, len(history), step)) | {len(history) - 1})
        for index in shown:
            record = history[index]
            cells = [str(record["epoch"]), f"{record['loss_d']:.4f}", f"{record['loss_g']:.4f}",
                     f"{record['mse']:.3e}"]
            if validated:
                cells.append(f"{record['val_nmse']:.3e}")
            table.add_row(*cells)
        console.print(table)
        if validated:
            kept = min(history, key=lambda record: record["val_nmse"])
            console.print(f"[+] Kept the generator from epoch [bold]{kept['epoch']}[/bold] "
                          f"(validation NMSE {kept['val_nmse']:.3e})")
    else:
        console.print("[yellow]epochs = 0: checkpoints hold the initial parameters.[/yellow]")

    for path in (paths.cgan, paths.ffn, paths.elm):
        console.print(f"[dim]-- Checkpoint -> {path}[/dim]")
    return True
