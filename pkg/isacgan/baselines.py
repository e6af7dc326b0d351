# isacgan/baselines.py

"""
ISACGAN - Baseline estimators and the NMSE metric

Least-squares inversion for both links (exact at zero noise thanks to the
orthogonal DFT pilots and phase sweep), a two-hidden-layer feed-forward
regressor and an extreme learning machine, all sharing the CGAN's input
standardization and rho target scaling.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from isacgan.config import SystemConfig, TrainConfig
from isacgan.container import read_container, write_container
from isacgan.dataset import Dataset, standardize_rows, unflatten_comm_input, unscale_target
from isacgan.errors import (ContainerFormatError, DegenerateInputError, InvalidArgumentError,
                            InvalidDimensionError)
from isacgan.neural_engine import (Dense, LeakyReLU, NetworkSpec, Parameters, adam_step, backward,
                                   copy_params, forward, init_adam, init_params, load_network,
                                   predict, save_network)
from isacgan.utils import mean_row_nmse, unstack_real_imag_batch

logger = logging.getLogger(__name__)

FFN_HIDDEN = 256
ELM_HIDDEN = 256
ELM_RIDGE = 1e-6
LEAK = 0.2


# ==================================================================
# NMSE
# ==================================================================

def nmse(estimated: np.ndarray, truth: np.ndarray) -> float:
    """||est - truth||_F^2 / ||truth||_F^2 for one trial."""
    estimated = np.asarray(estimated)
    truth = np.asarray(truth)
    if estimated.shape != truth.shape:
        raise InvalidDimensionError(f"estimate {estimated.shape} and truth {truth.shape} differ")
    reference = float(np.vdot(truth, truth).real)
    if reference == 0.0:
        raise DegenerateInputError("true channel is zero; NMSE is undefined")
    error = estimated - truth
    return float(np.vdot(error, error).real) / reference


def nmse_batch(estimated: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-sample NMSE over the leading axis."""
    return np.array([nmse(e, t) for e, t in zip(estimated, truth)])


def nmse_mc(estimator, scenario, trials: int, rng: np.random.Generator, workers: int = 1) -> float:
    """
    Monte-Carlo mean NMSE. `scenario(rng)` returns (observation, truth) from
    fresh channel and noise draws; `estimator(observation)` sees the
    observation only. Trial i always uses child stream i, and the mean is
    taken in trial order whatever `workers` is.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    streams = rng.spawn(trials)

    def run_trial(stream):
        observation, truth = scenario(stream)
        return nmse(estimator(observation), truth)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run_trial, streams))
    else:
        values = [run_trial(stream) for stream in streams]
    return float(np.mean(values))


# ==================================================================
# Least squares
# ==================================================================

def _pilot_power(X: np.ndarray) -> float:
    M = X.shape[0]
    power = float(np.vdot(X, X).real) / M
    if power == 0.0:
        raise DegenerateInputError("pilot matrix has zero power")
    return power


def ls_sensing(Y_avg: np.ndarray, X: np.ndarray) -> np.ndarray:
    """A_hat^H = Y_avg X^H / P_tx."""
    Y_avg = np.asarray(Y_avg)
    if Y_avg.ndim != 2 or Y_avg.shape != X.shape:
        raise InvalidDimensionError(f"observation {Y_avg.shape} does not match pilots {X.shape}")
    return (Y_avg @ X.conj().T / _pilot_power(X)).conj().T


def ls_comm(Y_ue: np.ndarray, Theta: np.ndarray, X: np.ndarray) -> np.ndarray:
    """G_hat^H = (1/N) Theta Y_ue X^H / P_tx."""
    Y_ue = np.asarray(Y_ue)
    N = Theta.shape[0]
    if Y_ue.ndim != 2 or Y_ue.shape[0] != Theta.shape[1] or Y_ue.shape[1] != X.shape[1]:
        raise InvalidDimensionError(f"observation {Y_ue.shape} does not match Theta{Theta.shape}, X{X.shape}")
    return (Theta @ Y_ue @ X.conj().T / (N * _pilot_power(X))).conj().T


def ls_from_inputs(R: np.ndarray, link: str, config: SystemConfig, X: np.ndarray,
                   Theta: np.ndarray | None = None) -> np.ndarray:
    """LS estimates for a batch of raw flat inputs."""
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    if link == "sensing":
        Y = unstack_real_imag_batch(R, (config.M, config.P))
        return np.stack([ls_sensing(y, X) for y in Y])
    if link == "comm":
        if Theta is None:
            raise InvalidArgumentError("comm LS needs the phase matrix")
        Y = unflatten_comm_input(R, config.C, config.P)
        return np.stack([ls_comm(y, Theta, X) for y in Y])
    raise InvalidArgumentError(f"unknown link {link!r}")


# ==================================================================
# Learned baselines
# ==================================================================

def _check_training_set(dataset: Dataset, link: str):
    if len(dataset) == 0:
        raise InvalidArgumentError("training set is empty")
    if dataset.link != link:
        raise InvalidArgumentError(f"dataset link {dataset.link!r} does not match model link {link!r}")
    if not dataset.metadata.get("prepared"):
        raise InvalidArgumentError("dataset must be standardized and rho-scaled (see dataset.prepare)")


def _channel_shape(link: str, M: int, N: int) -> tuple[int, int]:
    return (M, M) if link == "sensing" else (M, N)


@dataclass
class FfnModel:
    link: str
    M: int
    N: int
    spec: NetworkSpec
    params: Parameters
    rho: float
    history: list = field(default_factory=list)

    def regress(self, R_standardized: np.ndarray) -> np.ndarray:
        return predict(self.spec, self.params, np.atleast_2d(R_standardized))

    def estimate_batch(self, R: np.ndarray) -> np.ndarray:
        scaled = self.regress(standardize_rows(R))
        shape = _channel_shape(self.link, self.M, self.N)
        return unstack_real_imag_batch(unscale_target(scaled, self.rho), shape)


def ffn_spec(in_features: int, out_features: int) -> NetworkSpec:
    layers = (Dense(in_features, FFN_HIDDEN), LeakyReLU(LEAK),
              Dense(FFN_HIDDEN, FFN_HIDDEN), LeakyReLU(LEAK),
              Dense(FFN_HIDDEN, out_features))
    return NetworkSpec(layers=layers, input_shape=(in_features,))


def build_ffn(config: SystemConfig, link: str, rng: np.random.Generator) -> FfnModel:
    if link == "sensing":
        in_features, out_features = 2 * config.M * config.P, 2 * config.M * config.M
    else:
        in_features, out_features = 2 * config.C * config.P, 2 * config.M * config.N
    spec = ffn_spec(in_features, out_features)
    return FfnModel(link=link, M=config.M, N=config.N, spec=spec,
                    params=init_params(spec, rng), rho=config.rho)


def train_ffn(model: FfnModel, dataset: Dataset, train_cfg: TrainConfig, on_epoch=None,
              validation: Dataset | None = None) -> FfnModel:
    """
    Adam on the per-element MSE, generator learning rate and batch size.
    Keeps the best epoch on `validation` the same way the CGAN does.
    """
    _check_training_set(dataset, model.link)
    if validation is not None:
        _check_training_set(validation, model.link)
    rng = np.random.default_rng(train_cfg.seed)
    state = init_adam(model.params)
    n, b = len(dataset), train_cfg.batch_size
    best_score, best_epoch, best_params = np.inf, 0, None
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, b):
            batch = order[start:start + b]
            output, cache = forward(model.spec, model.params, dataset.R[batch])
            diff = output - dataset.O[batch]
            losses.append(float(np.mean(diff * diff)))
            grads = backward(model.spec, model.params, cache, 2.0 * diff / diff.size)
            adam_step(model.params, grads, state, train_cfg.lr_generator)
        summary = {"epoch": epoch + 1, "mse": float(np.mean(losses))}
        if validation is not None:
            summary["val_nmse"] = mean_row_nmse(model.regress(validation.R), validation.O)
            if summary["val_nmse"] < best_score:
                best_score, best_epoch = summary["val_nmse"], epoch + 1
                best_params = copy_params(model.params)
        model.history.append(summary)
        logger.debug("ffn epoch %d/%d  mse=%.3e", epoch + 1, train_cfg.epochs, summary["mse"])
        if on_epoch is not None:
            on_epoch(summary)
    if best_params is not None:
        model.params = best_params
        logger.debug("kept the FFN from epoch %d (validation NMSE %.3e)", best_epoch, best_score)
    return model


def ffn_baseline(train_dataset: Dataset, config: SystemConfig, train_cfg: TrainConfig,
                 rng: np.random.Generator | None = None, on_epoch=None,
                 validation: Dataset | None = None) -> FfnModel:
    rng = rng if rng is not None else np.random.default_rng(train_cfg.seed)
    model = build_ffn(config, train_dataset.link, rng)
    return train_ffn(model, train_dataset, train_cfg, on_epoch, validation)


@dataclass
class ElmModel:
    link: str
    M: int
    N: int
    hidden_weight: np.ndarray     # in x hidden, fixed
    hidden_bias: np.ndarray       # hidden, fixed
    output_weight: np.ndarray     # (hidden + 1) x out, last row is the output bias
    rho: float

    def features(self, R_standardized: np.ndarray) -> np.ndarray:
        pre = np.atleast_2d(R_standardized) @ self.hidden_weight + self.hidden_bias
        hidden = np.where(pre > 0, pre, LEAK * pre)
        return np.hstack([hidden, np.ones((hidden.shape[0], 1))])

    def regress(self, R_standardized: np.ndarray) -> np.ndarray:
        return self.features(R_standardized) @ self.output_weight

    def estimate_batch(self, R: np.ndarray) -> np.ndarray:
        scaled = self.regress(standardize_rows(R))
        shape = _channel_shape(self.link, self.M, self.N)
        return unstack_real_imag_batch(unscale_target(scaled, self.rho), shape)


def solve_ridge(features: np.ndarray, targets: np.ndarray, ridge: float) -> np.ndarray:
    """
    Solves (F^T F / n + ridge I) W = F^T T / n.

    LAPACK hands back a Fortran-ordered W; the result is made C-contiguous
    so a reloaded checkpoint multiplies with the same memory layout.
    """
    if ridge <= 0:
        raise InvalidArgumentError(f"ridge must be > 0, got {ridge}")
    n = features.shape[0]
    gram = features.T @ features / n + ridge * np.eye(features.shape[1])
    return np.ascontiguousarray(linalg.solve(gram, features.T @ targets / n, assume_a="pos"))


def elm_baseline(train_dataset: Dataset, config: SystemConfig, rng: np.random.Generator | None = None,
                 hidden: int = ELM_HIDDEN, ridge: float = ELM_RIDGE) -> ElmModel:
    """Random fixed leaky-ReLU hidden layer; output weights from one ridge solve."""
    _check_training_set(train_dataset, train_dataset.link)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    in_features = train_dataset.R.shape[1]
    limit = np.sqrt(6.0 / (in_features + hidden))
    model = ElmModel(link=train_dataset.link, M=config.M, N=config.N,
                     hidden_weight=rng.uniform(-limit, limit, size=(in_features, hidden)),
                     hidden_bias=np.zeros(hidden),
                     output_weight=np.zeros((hidden + 1, train_dataset.O.shape[1])),
                     rho=config.rho)
    model.output_weight = solve_ridge(model.features(train_dataset.R), train_dataset.O, ridge)
    logger.debug("fitted ELM on %d pairs (hidden=%d, ridge=%g)", len(train_dataset), hidden, ridge)
    return model


# ==================================================================
# Checkpoints
# ==================================================================

def save_ffn(model: FfnModel, path: str, metadata: dict | None = None):
    save_network(path, model.spec, model.params, {
        **(metadata or {}), "link": model.link, "M": model.M, "N": model.N,
        "rho": model.rho, "history": model.history,
    })


def load_ffn(path: str) -> tuple[FfnModel, dict]:
    spec, params, metadata = load_network(path)
    try:
        model = FfnModel(link=metadata["link"], M=metadata["M"], N=metadata["N"], spec=spec,
                         params=params, rho=metadata["rho"], history=list(metadata.get("history", [])))
    except KeyError as exc:
        raise ContainerFormatError(f"{path}: FFN checkpoint lacks {exc}") from exc
    return model, metadata


def save_elm(model: ElmModel, path: str, metadata: dict | None = None):
    write_container(path, "elm", {**(metadata or {}), "link": model.link, "M": model.M, "N": model.N,
                                  "rho": model.rho},
                    {"hidden_weight": model.hidden_weight, "hidden_bias": model.hidden_bias,
                     "output_weight": model.output_weight})


def load_elm(path: str) -> tuple[ElmModel, dict]:
    metadata, arrays = read_container(path, "elm")
    try:
        model = ElmModel(link=metadata["link"], M=metadata["M"], N=metadata["N"],
                         hidden_weight=arrays["hidden_weight"], hidden_bias=arrays["hidden_bias"],
                         output_weight=arrays["output_weight"], rho=metadata["rho"])
    except KeyError as exc:
        raise ContainerFormatError(f"{path}: ELM checkpoint lacks {exc}") from exc
    return model, metadata
