# isacgan/utils.py

"""
ISACGAN Toolkit - Shared Utility Functions
"""
import hashlib
import json

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

from isacgan.errors import DegenerateInputError, InvalidDimensionError


def print_error(message: str, console: Console | None = None):
    """Prints a formatted error message."""
    console = console or Console(stderr=True)
    console.print(Panel(f"[bold red]ERROR:[/bold red] {message}", title="Error", border_style="red"))


def make_progress(console: Console) -> Progress:
    """Progress bar used for training epochs and evaluation sweeps."""
    return Progress(SpinnerColumn(), TextColumn("{task.description}"), BarColumn(), MofNCompleteColumn(),
                    TimeElapsedColumn(), console=console, transient=True)


def db_to_linear(value_db: float) -> float:
    """Converts a dB (or dBm -> mW) value into linear scale."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Converts a linear power ratio into dB; zero maps to -inf."""
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(value))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with per-entry variance `variance`."""
    draws = rng.standard_normal((*np.atleast_1d(shape).tolist(), 2))
    return np.sqrt(variance / 2.0) * (draws[..., 0] + 1j * draws[..., 1])


def stack_real_imag(matrix: np.ndarray) -> np.ndarray:
    """[Re(vec(X)), Im(vec(X))] with column-major vec, as used for every channel target."""
    flat = np.asarray(matrix).reshape(-1, order="F")
    return np.concatenate([flat.real, flat.imag]).astype(np.float64)


def unstack_real_imag(vector: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Inverse of stack_real_imag."""
    vector = np.asarray(vector, dtype=np.float64)
    size = int(np.prod(shape))
    if vector.shape != (2 * size,):
        raise InvalidDimensionError(f"expected a real vector of length {2 * size}, got shape {vector.shape}")
    return (vector[:size] + 1j * vector[size:]).reshape(shape, order="F")


def unstack_real_imag_batch(vectors: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Row-wise unstack_real_imag: (n, 2 rows cols) -> (n, rows, cols) complex."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    rows, cols = shape
    size = rows * cols
    if vectors.shape[1] != 2 * size:
        raise InvalidDimensionError(f"expected rows of length {2 * size}, got {vectors.shape[1]}")
    flat = vectors[:, :size] + 1j * vectors[:, size:]
    return flat.reshape(-1, cols, rows).transpose(0, 2, 1)


def frobenius_power(matrix: np.ndarray) -> float:
    """Average per-entry power ||X||_F^2 / size."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        raise DegenerateInputError("empty array has no power")
    return float(np.vdot(matrix, matrix).real / matrix.size)


def mean_row_nmse(estimated: np.ndarray, truth: np.ndarray) -> float:
    """Mean over rows of ||est - truth||^2 / ||truth||^2, on stacked real vectors."""
    estimated, truth = np.atleast_2d(estimated), np.atleast_2d(truth)
    if estimated.shape != truth.shape:
        raise InvalidDimensionError(f"estimate {estimated.shape} and truth {truth.shape} differ")
    reference = np.sum(truth * truth, axis=1)
    if np.any(reference == 0.0):
        raise DegenerateInputError("a true channel is zero; NMSE is undefined")
    return float(np.mean(np.sum((estimated - truth) ** 2, axis=1) / reference))


def canonical_json(payload) -> str:
    """Deterministic JSON text (sorted keys, no whitespace) used for hashing and headers."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def short_hash(payload) -> str:
    """16 hex chars of the SHA-256 of the canonical JSON of `payload`."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:16]


def format_float(value: float) -> str:
    """Shortest text form that round-trips a 64-bit float."""
    return repr(float(value))
