# isacgan/dataset.py

"""
ISACGAN - Dataset construction

Real-valued (input, target) pairs for the sensing link (BS observation ->
A) and the communication link (UE_k observation -> G_k):

    sensing:  R = [Re vec(Y_avg), Im vec(Y_avg)]   length 2MP
              O = [Re vec(A),     Im vec(A)]       length 2M^2
    comm:     R = [Re Y_ue (sub-frame major), Im Y_ue]   length 2CP
              O = [Re vec(G_k),   Im vec(G_k)]     length 2MN

Y_avg is the mean of the C SI-compensated sub-frame observations. Every
(SNR, q) cell draws fresh channels from its own random stream, emits the
noiseless observation as duplicate v = 1 and V - 1 noisy duplicates.
"""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from isacgan.channel_model import draw_comm_channels, draw_sensing_channel, draw_si_channel
from isacgan.config import LINKS, SystemConfig
from isacgan.container import read_container, write_container
from isacgan.errors import (ContainerFormatError, DegenerateInputError,
                            InvalidArgumentError, InvalidDimensionError)
from isacgan.pilot_protocol import (ReceivedBS, ReceivedUE, build_phase_matrix, build_pilot_matrix,
                                    compensate_si, noise_variance_from_snr, synthesize_bs_rx,
                                    synthesize_ue_rx)
from isacgan.utils import stack_real_imag

logger = logging.getLogger(__name__)

_LINK_STREAM = {"sensing": 1, "comm": 2}
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class SamplePair:
    R: np.ndarray
    O: np.ndarray
    snr_db: float
    q: int
    v: int
    link: str
    k: int = -1


@dataclass(frozen=True)
class NormalizationRecord:
    mean: float
    std: float


@dataclass
class Dataset:
    """Pairs stored column-wise; row i is one SamplePair."""

    link: str
    R: np.ndarray
    O: np.ndarray
    snr_db: np.ndarray
    q: np.ndarray
    v: np.ndarray
    k: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.R.shape[0]

    def pair(self, index: int) -> SamplePair:
        return SamplePair(R=self.R[index], O=self.O[index], snr_db=float(self.snr_db[index]),
                          q=int(self.q[index]), v=int(self.v[index]), link=self.link,
                          k=int(self.k[index]))

    def subset(self, indices: np.ndarray, **metadata_updates) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(link=self.link, R=self.R[indices], O=self.O[indices],
                       snr_db=self.snr_db[indices], q=self.q[indices], v=self.v[indices],
                       k=self.k[indices], metadata={**self.metadata, **metadata_updates})


def pair_dimensions(config: SystemConfig, link: str) -> tuple[int, int]:
    """(input length, target length) for a link."""
    if link == "sensing":
        return 2 * config.M * config.P, 2 * config.M * config.M
    if link == "comm":
        return 2 * config.C * config.P, 2 * config.M * config.N
    raise InvalidArgumentError(f"unknown link {link!r}; expected one of {', '.join(LINKS)}")


# ==================================================================
# Pair construction
# ==================================================================

def build_sensing_pair(A: np.ndarray, received: ReceivedBS, q: int = 0, v: int = 1) -> SamplePair:
    """Pair from an SI-compensated BS observation; sub-frames are averaged."""
    Y = received.Y_bs
    if Y.ndim != 3 or Y.shape[1] != A.shape[0] or A.shape[0] != A.shape[1]:
        raise InvalidDimensionError(f"observation {Y.shape} does not match A{A.shape}")
    Y_avg = Y.mean(axis=0)
    snr = np.inf if received.snr_db is None else received.snr_db
    return SamplePair(R=stack_real_imag(Y_avg), O=stack_real_imag(A), snr_db=snr, q=q, v=v, link="sensing")


def build_comm_pair(G_k: np.ndarray, received: ReceivedUE, q: int = 0, v: int = 1) -> SamplePair:
    """Pair from a UE observation; R keeps every sub-frame, row-major over (c, p)."""
    Y = received.Y_ue
    if Y.ndim != 2 or G_k.ndim != 2 or Y.shape[0] != G_k.shape[1] or Y.shape[1] != G_k.shape[0]:
        raise InvalidDimensionError(f"observation {Y.shape} does not match G_k{G_k.shape}")
    flat = Y.reshape(-1)
    snr = np.inf if received.snr_db is None else received.snr_db
    R = np.concatenate([flat.real, flat.imag]).astype(np.float64)
    return SamplePair(R=R, O=stack_real_imag(G_k), snr_db=snr, q=q, v=v, link="comm", k=received.k)


def unflatten_comm_input(R: np.ndarray, C: int, P: int) -> np.ndarray:
    """Inverse of the comm input flattening: the C x P complex observation."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape[-1] != 2 * C * P:
        raise InvalidDimensionError(f"expected length {2 * C * P}, got {R.shape[-1]}")
    half = C * P
    return (R[..., :half] + 1j * R[..., half:]).reshape(*R.shape[:-1], C, P)


# ==================================================================
# Generation
# ==================================================================

def cell_rng(seed: int, link: str, snr_index: int, q: int) -> np.random.Generator:
    """Independent random stream for one (SNR, q) cell."""
    return np.random.default_rng([seed, _LINK_STREAM[link], snr_index, q])


def _sensing_cell(config, snr_db, rng, V, q, S, X) -> list[SamplePair]:
    channel = draw_sensing_channel(config, rng)
    pairs = []
    for v in range(1, V + 1):
        sigma2 = 0.0 if v == 1 else noise_variance_from_snr(channel.A, snr_db)
        received = synthesize_bs_rx(channel.A, S, X, sigma2, rng, config.C, snr_db=snr_db)
        pairs.append(build_sensing_pair(channel.A, compensate_si(received, S, X), q=q, v=v))
    return pairs


def _comm_cell(config, snr_db, rng, V, q, user, Theta, X) -> list[SamplePair]:
    channels = draw_comm_channels(config, rng)
    G_k = channels.G[user]
    pairs = []
    for v in range(1, V + 1):
        sigma2 = 0.0 if v == 1 else noise_variance_from_snr(G_k, snr_db)
        received = synthesize_ue_rx(G_k, Theta, X, sigma2, rng, snr_db=snr_db, k=user)
        pairs.append(build_comm_pair(G_k, received, q=q, v=v))
    return pairs


def draw_pair(config: SystemConfig, link: str, snr_db: float, rng: np.random.Generator,
              user: int = 0, S: np.ndarray | None = None) -> SamplePair:
    """
    One noisy pair from a fresh channel draw, as a Monte-Carlo test scenario.
    S defaults to the seed-fixed self-interference channel; callers drawing
    many pairs pass it in once.
    """
    X = build_pilot_matrix(config.M, config.P, config.tx_power_linear)
    if link == "sensing":
        S = draw_si_channel(config).S if S is None else S
        channel = draw_sensing_channel(config, rng)
        sigma2 = noise_variance_from_snr(channel.A, snr_db)
        received = synthesize_bs_rx(channel.A, S, X, sigma2, rng, config.C, snr_db=snr_db)
        return build_sensing_pair(channel.A, compensate_si(received, S, X))
    if link == "comm":
        G_k = draw_comm_channels(config, rng).G[user]
        sigma2 = noise_variance_from_snr(G_k, snr_db)
        Theta = build_phase_matrix(config.N, config.C)
        return build_comm_pair(G_k, synthesize_ue_rx(G_k, Theta, X, sigma2, rng, snr_db=snr_db, k=user))
    raise InvalidArgumentError(f"unknown link {link!r}")


def generate_dataset(config: SystemConfig, snr_grid_db, Q: int, V: int, link: str,
                     seed: int | None = None, user: int = 0, workers: int = 1) -> Dataset:
    """
    Q * V * |grid| pairs ordered by (SNR, q, v).

    The result is a pure function of (config, grid, Q, V, link, user, seed);
    `workers` only changes how the cells are scheduled.
    """
    snr_grid_db = [float(s) for s in snr_grid_db]
    if not snr_grid_db:
        raise InvalidArgumentError("SNR grid must not be empty")
    if Q < 1 or V < 1:
        raise InvalidArgumentError(f"Q and V must be >= 1 (Q={Q}, V={V})")
    if link not in LINKS:
        raise InvalidArgumentError(f"unknown link {link!r}")
    if link == "comm" and not 0 <= user < config.K:
        raise InvalidArgumentError(f"user {user} outside [0, {config.K - 1}]")
    seed = config.seed if seed is None else seed

    X = build_pilot_matrix(config.M, config.P, config.tx_power_linear)
    S = draw_si_channel(config).S
    Theta = build_phase_matrix(config.N, config.C)

    def run_cell(cell):
        snr_index, q = cell
        snr_db = snr_grid_db[snr_index]
        rng = cell_rng(seed, link, snr_index, q)
        if link == "sensing":
            return _sensing_cell(config, snr_db, rng, V, q, S, X)
        return _comm_cell(config, snr_db, rng, V, q, user, Theta, X)

    cells = [(i, q) for i in range(len(snr_grid_db)) for q in range(Q)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(cell) for cell in cells]

    pairs = [pair for cell_pairs in results for pair in cell_pairs]
    # The stored snr is the cell's grid value for every duplicate, including the noiseless one.
    snr_column = np.repeat(np.asarray(snr_grid_db), Q * V)
    dataset = Dataset(
        link=link,
        R=np.stack([p.R for p in pairs]),
        O=np.stack([p.O for p in pairs]),
        snr_db=snr_column,
        q=np.array([p.q for p in pairs], dtype=np.int64),
        v=np.array([p.v for p in pairs], dtype=np.int64),
        k=np.array([p.k for p in pairs], dtype=np.int64),
        metadata={
            "config": dataclasses.asdict(config),
            "Q": Q,
            "V": V,
            "snr_grid_db": snr_grid_db,
            "seed": seed,
            "user": user if link == "comm" else -1,
            "split": "full",
            "prepared": False,
        },
    )
    logger.info("generated %d %s pairs (Q=%d, V=%d, %d SNR points)", len(dataset), link, Q, V, len(snr_grid_db))
    return dataset


# ==================================================================
# Pre-processing
# ==================================================================

def standardize(R: np.ndarray) -> tuple[np.ndarray, NormalizationRecord]:
    """(R - mean) / std over the sample's own entries (population std)."""
    R = np.asarray(R, dtype=np.float64)
    mean = float(R.mean())
    std = float(R.std())
    if not std > STD_FLOOR:
        raise DegenerateInputError(f"sample is (near-)constant, std={std:.3e}")
    return (R - mean) / std, NormalizationRecord(mean=mean, std=std)


def standardize_rows(R: np.ndarray) -> np.ndarray:
    """Row-wise standardize for a batch of samples."""
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    mean = R.mean(axis=1, keepdims=True)
    std = R.std(axis=1, keepdims=True)
    if np.any(~(std > STD_FLOOR)):
        raise DegenerateInputError("batch contains a (near-)constant sample")
    return (R - mean) / std


def scale_target(O: np.ndarray, rho: float) -> np.ndarray:
    if rho <= 0:
        raise InvalidArgumentError(f"scaling factor must be > 0, got {rho}")
    return rho * np.asarray(O, dtype=np.float64)


def unscale_target(O_s: np.ndarray, rho: float) -> np.ndarray:
    if rho <= 0:
        raise InvalidArgumentError(f"scaling factor must be > 0, got {rho}")
    return np.asarray(O_s, dtype=np.float64) / rho


def prepare(dataset: Dataset, rho: float) -> Dataset:
    """Standardized inputs and rho-scaled targets, ready for training."""
    if dataset.metadata.get("prepared"):
        return dataset
    prepared = dataclasses.replace(dataset, R=standardize_rows(dataset.R), O=scale_target(dataset.O, rho),
                                   metadata={**dataset.metadata, "prepared": True, "rho": rho})
    return prepared


def split(dataset: Dataset, test_fraction: float, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Disjoint shuffled train/test split."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidArgumentError(f"test fraction must lie in (0, 1), got {test_fraction}")
    n = len(dataset)
    if n < 2:
        raise InvalidArgumentError("need at least two pairs to split")
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    order = rng.permutation(n)
    test_idx, train_idx = order[:n_test], order[n_test:]
    train = dataset.subset(train_idx, split="train", test_fraction=test_fraction)
    test = dataset.subset(test_idx, split="test", test_fraction=test_fraction)
    return train, test


# ==================================================================
# Persistence
# ==================================================================

def save_dataset(dataset: Dataset, path: str):
    metadata = {**dataset.metadata, "link": dataset.link, "size": len(dataset)}
    write_container(path, "dataset", metadata, {
        "R": dataset.R, "O": dataset.O, "snr_db": dataset.snr_db,
        "q": dataset.q, "v": dataset.v, "k": dataset.k,
    })
    logger.info("saved %d pairs to %s", len(dataset), path)


def load_dataset(path: str) -> Dataset:
    metadata, arrays = read_container(path, "dataset")
    try:
        n = metadata["size"]
        dataset = Dataset(link=metadata["link"], R=arrays["R"], O=arrays["O"], snr_db=arrays["snr_db"],
                          q=arrays["q"].astype(np.int64), v=arrays["v"].astype(np.int64),
                          k=arrays["k"].astype(np.int64), metadata=metadata)
    except KeyError as exc:
        raise ContainerFormatError(f"{path}: missing dataset field {exc}") from exc
    if any(len(column) != n for column in (dataset.R, dataset.O, dataset.snr_db, dataset.q)):
        raise ContainerFormatError(f"{path}: column lengths disagree with recorded size {n}")
    return dataset
