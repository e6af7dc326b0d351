# isacgan.py

"""
ISACGAN - CGAN channel estimation toolkit for RIS-assisted ISAC

Main entry point. Parses the run configuration and dispatches to the
command modules; `all` runs generate, train and evaluate in order.
"""
import argparse
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler

from isacgan import __version__
from isacgan.commands import complexity, evaluate, generate, sweep, train
from isacgan.config import LINKS, PROFILES, parse_config
from isacgan.errors import ConfigError
from isacgan.utils import print_error

# --- Available commands ---
# To add a command, import its module above and register it here.
COMMANDS = [
    ("generate", "Generate the training dataset", generate),
    ("train", "Train the CGAN and the FFN / ELM baselines", train),
    ("evaluate", "NMSE versus SNR for every method", evaluate),
    ("sweep", "NMSE versus M or N (retrains per value)", sweep),
    ("complexity", "Closed-form and counted operation totals", complexity),
]

# `all` runs these in order and stops at the first failure.
PIPELINE = ("generate", "train", "evaluate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulate, train and evaluate CGAN channel estimators for RIS-assisted ISAC.",
        epilog="Example: python isacgan.py all --profile desk --seed 7 --out runs/desk",
    )
    parser.add_argument("command", choices=[name for name, _, _ in COMMANDS] + ["all"],
                        help="Command to run.")
    parser.add_argument("--config", metavar="PATH", help="key=value configuration file.")
    parser.add_argument("--seed", type=int, help="Master random seed (overrides the config).")
    parser.add_argument("--profile", choices=sorted(PROFILES), help="Scale profile: desk or full.")
    parser.add_argument("--out", metavar="DIR", help="Output directory for datasets, checkpoints and reports.")
    parser.add_argument("--link", choices=LINKS, help="Which channel to estimate.")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                        help="Override one configuration key (repeatable).")
    parser.add_argument("--variable", choices=("M", "N"), help="Sweep variable (sweep only).")
    parser.add_argument("--values", metavar="V1,V2,...", help="Sweep values (sweep only).")
    parser.add_argument("--verbose", action="store_true", help="Debug-level logging.")
    return parser


def main(argv=None) -> int:
    """Main controller function."""
    console = Console()
    args = build_parser().parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s",
                        datefmt="[%X]", handlers=[RichHandler(console=console, show_path=False)])
    console.print(f"[bold blue]ISACGAN - RIS-assisted ISAC channel estimation v{__version__}[/bold blue]")

    overrides = list(args.overrides)
    if args.variable:
        overrides.append(f"sweep_variable={args.variable}")
    if args.values:
        overrides.append(f"sweep_values={args.values}")
    try:
        run_config = parse_config(args.config, overrides, seed=args.seed, profile=args.profile,
                                  out_dir=args.out, link=args.link)
    except ConfigError as e:
        print_error(f"Invalid configuration: {e}", console)
        return 1
    except OSError as e:
        print_error(f"Cannot read configuration file: {e}", console)
        return 1

    console.print(f"[+] Profile [cyan]{run_config.profile}[/cyan], seed [cyan]{run_config.seed}[/cyan], "
                  f"config [cyan]{run_config.config_hash()}[/cyan], output [cyan]{run_config.out_dir}[/cyan]")

    modules = {name: module for name, _, module in COMMANDS}
    selected = PIPELINE if args.command == "all" else (args.command,)
    for name in selected:
        if not modules[name].run(console, run_config):
            console.print(f"\n[bold red]Command '{name}' failed.[/bold red]")
            return 1

    console.print("\n" + "=" * 80)
    console.print(f"[bold green]Done. {len(selected)} command(s) completed successfully.[/bold green]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
