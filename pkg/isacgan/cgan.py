# isacgan/cgan.py

"""
ISACGAN - Conditional GAN estimators

SE-CGAN (dense, sensing link) and CE-CGAN (convolutional, communication
link) generator/discriminator pairs, the adversarial losses with the
alpha-weighted L2 term, the per-minibatch training loop and online
estimation with rho^-1 rescaling.

The discriminator only sees channel vectors (scaled targets or generator
outputs); the observation conditions the generator alone. Losses are
evaluated on the discriminator's pre-sigmoid scores with log-sigmoid terms,
so they stay finite for any finite score.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit, logit

from isacgan.config import SystemConfig, TrainConfig
from isacgan.container import read_container, write_container
from isacgan.dataset import Dataset, standardize_rows, unscale_target
from isacgan.errors import (ContainerFormatError, InvalidArgumentError, InvalidDimensionError,
                            UnsupportedConfigurationError)
from isacgan.neural_engine import (BatchNorm, Conv1d, Dense, Flatten, Gradients, LeakyReLU,
                                   NetworkSpec, Parameters, Sigmoid, adam_step, backward, copy_params,
                                   forward, init_adam, init_params, params_from_arrays, params_to_arrays)
from isacgan.utils import mean_row_nmse, unstack_real_imag_batch

logger = logging.getLogger(__name__)

SE_HIDDEN = (100, 200)
CE_FILTERS = 132
CE_KERNEL = 4
CE_STRIDE = 1
CE_HIDDEN = 500
LEAK = 0.2


@dataclass
class CganModel:
    link: str
    M: int
    N: int
    generator: NetworkSpec
    generator_params: Parameters
    discriminator: NetworkSpec
    discriminator_params: Parameters
    rho: float
    history: list = field(default_factory=list)

    @property
    def P(self) -> int:
        return self.M

    @property
    def C(self) -> int:
        return self.N

    @property
    def channel_shape(self) -> tuple[int, int]:
        return (self.M, self.M) if self.link == "sensing" else (self.M, self.N)

    @property
    def discriminator_body(self) -> NetworkSpec:
        """The discriminator up to its pre-sigmoid score."""
        return NetworkSpec(layers=self.discriminator.layers[:-1], input_shape=self.discriminator.input_shape)

    @property
    def discriminator_body_params(self) -> Parameters:
        # Shares the per-layer dicts, so updates land in discriminator_params.
        return self.discriminator_params[:-1]


# ==================================================================
# Architectures
# ==================================================================

def _dense_block(in_features: int, out_features: int) -> list:
    return [Dense(in_features, out_features), BatchNorm(out_features), LeakyReLU(LEAK)]


def se_generator_spec(M: int) -> NetworkSpec:
    h1, h2 = SE_HIDDEN
    layers = [*_dense_block(2 * M * M, h1), *_dense_block(h1, h2), Dense(h2, 2 * M * M)]
    return NetworkSpec(layers=tuple(layers), input_shape=(2 * M * M,))


def se_discriminator_spec(M: int) -> NetworkSpec:
    h1, h2 = SE_HIDDEN
    layers = [*_dense_block(2 * M * M, h1), *_dense_block(h1, h2), Dense(h2, 1), Sigmoid()]
    return NetworkSpec(layers=tuple(layers), input_shape=(2 * M * M,))


def _conv_body(length: int, channels: int) -> list:
    conv = Conv1d(channels, CE_FILTERS, CE_KERNEL, CE_STRIDE)
    flat = conv.output_length(length) * CE_FILTERS
    return [conv, BatchNorm(CE_FILTERS), LeakyReLU(LEAK), Flatten(), *_dense_block(flat, CE_HIDDEN)]


def ce_generator_spec(M: int, N: int) -> NetworkSpec:
    C, P = N, M
    if C < CE_KERNEL:
        raise UnsupportedConfigurationError(f"C={C} sub-frames is shorter than the kernel ({CE_KERNEL})")
    layers = [*_conv_body(C, 2 * P), Dense(CE_HIDDEN, 2 * M * N)]
    return NetworkSpec(layers=tuple(layers), input_shape=(C, 2 * P))


def ce_discriminator_spec(M: int, N: int) -> NetworkSpec:
    length = 2 * M * N
    if length < CE_KERNEL:
        raise UnsupportedConfigurationError(f"channel length {length} is shorter than the kernel ({CE_KERNEL})")
    layers = [*_conv_body(length, 1), Dense(CE_HIDDEN, 1), Sigmoid()]
    return NetworkSpec(layers=tuple(layers), input_shape=(length, 1))


def _build(link, config, generator, discriminator, rng) -> CganModel:
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    return CganModel(link=link, M=config.M, N=config.N,
                     generator=generator, generator_params=init_params(generator, rng),
                     discriminator=discriminator, discriminator_params=init_params(discriminator, rng),
                     rho=config.rho)


def build_se_cgan(config: SystemConfig, rng: np.random.Generator | None = None) -> CganModel:
    return _build("sensing", config, se_generator_spec(config.M), se_discriminator_spec(config.M), rng)


def build_ce_cgan(config: SystemConfig, rng: np.random.Generator | None = None) -> CganModel:
    return _build("comm", config, ce_generator_spec(config.M, config.N),
                  ce_discriminator_spec(config.M, config.N), rng)


def build_cgan(config: SystemConfig, link: str, rng: np.random.Generator | None = None) -> CganModel:
    if link == "sensing":
        return build_se_cgan(config, rng)
    if link == "comm":
        return build_ce_cgan(config, rng)
    raise InvalidArgumentError(f"unknown link {link!r}")


# --- Input arrangement ---

def generator_input(model: CganModel, R: np.ndarray) -> np.ndarray:
    """
    Standardized flat inputs -> generator layout. The comm layout is
    C positions x 2P channels, position c holding [Re y_c, Im y_c].
    """
    R = np.atleast_2d(R)
    if model.link == "sensing":
        return R
    half = model.C * model.P
    real = R[:, :half].reshape(-1, model.C, model.P)
    imag = R[:, half:].reshape(-1, model.C, model.P)
    return np.concatenate([real, imag], axis=2)


def discriminator_input(model: CganModel, channels: np.ndarray) -> np.ndarray:
    """Flat channel vectors -> discriminator layout."""
    channels = np.atleast_2d(channels)
    if model.link == "sensing":
        return channels
    return channels[:, :, np.newaxis]


# ==================================================================
# Losses
# ==================================================================

def discriminator_loss_logits(real_scores: np.ndarray,
                              fake_scores: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """
    L_D = -1/2 sum_j [log sigmoid(r_j) + log(1 - sigmoid(f_j))] and its
    gradients with respect to the pre-sigmoid scores.
    """
    real_scores = np.asarray(real_scores, dtype=np.float64)
    fake_scores = np.asarray(fake_scores, dtype=np.float64)
    if real_scores.shape != fake_scores.shape:
        raise InvalidDimensionError(f"score batches differ: {real_scores.shape} vs {fake_scores.shape}")
    loss = -0.5 * float(np.sum(log_expit(real_scores) + log_expit(-fake_scores)))
    return loss, -0.5 * expit(-real_scores), 0.5 * expit(fake_scores)


def discriminator_loss(d_real: np.ndarray, d_fake: np.ndarray) -> float:
    """L_D from discriminator probabilities."""
    loss, _, _ = discriminator_loss_logits(logit(np.asarray(d_real, dtype=np.float64)),
                                           logit(np.asarray(d_fake, dtype=np.float64)))
    return loss


def generator_loss_logits(fake_scores: np.ndarray, generated: np.ndarray, target: np.ndarray,
                          alpha: float) -> tuple[float, np.ndarray, np.ndarray]:
    """
    -1/b sum_j log sigmoid(f_j) + alpha * mean((target - generated)^2), with
    gradients for the scores and for the generator output.
    """
    if alpha < 0:
        raise InvalidArgumentError(f"alpha must be >= 0, got {alpha}")
    fake_scores = np.asarray(fake_scores, dtype=np.float64).reshape(-1)
    generated = np.atleast_2d(np.asarray(generated, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    if generated.shape != target.shape or generated.shape[0] != fake_scores.shape[0]:
        raise InvalidDimensionError(f"shapes disagree: scores {fake_scores.shape}, "
                                    f"output {generated.shape}, target {target.shape}")
    b = fake_scores.shape[0]
    diff = generated - target
    loss = -float(np.sum(log_expit(fake_scores))) / b + alpha * float(np.mean(diff * diff))
    d_scores = -expit(-fake_scores) / b
    d_generated = alpha * 2.0 * diff / diff.size
    return loss, d_scores, d_generated


def generator_loss(d_fake: np.ndarray, generated: np.ndarray, target: np.ndarray, alpha: float) -> float:
    """Generator objective from discriminator probabilities."""
    loss, _, _ = generator_loss_logits(logit(np.asarray(d_fake, dtype=np.float64)), generated, target, alpha)
    return loss


def generator_objective(model: CganModel, R: np.ndarray, target: np.ndarray,
                        alpha: float) -> tuple[float, Gradients]:
    """
    Full generator objective on prepared inputs and its generator gradients,
    backpropagated through the discriminator with the discriminator frozen.
    Batch statistics are used throughout and no running statistics move.
    """
    g_in = generator_input(model, R)
    generated, g_cache = forward(model.generator, model.generator_params, g_in, track_running_stats=False)
    scores, d_cache = forward(model.discriminator_body, model.discriminator_body_params,
                              discriminator_input(model, generated), track_running_stats=False)
    loss, d_scores, d_generated = generator_loss_logits(scores, generated, target, alpha)
    through_d = backward(model.discriminator_body, model.discriminator_body_params, d_cache,
                         d_scores.reshape(-1, 1)).input.reshape(generated.shape)
    grads = backward(model.generator, model.generator_params, g_cache, d_generated + through_d)
    return loss, grads


# ==================================================================
# Training
# ==================================================================

def _sum_gradients(first: Gradients, second: Gradients) -> Parameters:
    return [{key: a[key] + b[key] for key in a} for a, b in zip(first.params, second.params)]


def train_step(model: CganModel, R: np.ndarray, target: np.ndarray, train_cfg: TrainConfig,
               generator_state, discriminator_state) -> dict:
    """One discriminator update followed by one generator update on a prepared minibatch."""
    d_spec, d_params = model.discriminator_body, model.discriminator_body_params

    # --- 1. Generator forward ---
    generated, g_cache = forward(model.generator, model.generator_params, generator_input(model, R))

    # --- 2. Discriminator step on real (label 1) and generated (label 0) channels ---
    real_scores, real_cache = forward(d_spec, d_params, discriminator_input(model, target))
    fake_scores, fake_cache = forward(d_spec, d_params, discriminator_input(model, generated))
    loss_d, d_real, d_fake = discriminator_loss_logits(real_scores[:, 0], fake_scores[:, 0])
    d_grads = _sum_gradients(backward(d_spec, d_params, real_cache, d_real[:, np.newaxis]),
                             backward(d_spec, d_params, fake_cache, d_fake[:, np.newaxis]))
    adam_step(d_params, d_grads, discriminator_state, train_cfg.lr_discriminator)

    # --- 3. Generator step through the frozen discriminator ---
    scores, score_cache = forward(d_spec, d_params, discriminator_input(model, generated),
                                  track_running_stats=False)
    loss_g, d_scores, d_generated = generator_loss_logits(scores, generated, target, train_cfg.alpha)
    through_d = backward(d_spec, d_params, score_cache, d_scores.reshape(-1, 1)).input
    g_grads = backward(model.generator, model.generator_params, g_cache,
                       d_generated + through_d.reshape(generated.shape))
    adam_step(model.generator_params, g_grads, generator_state, train_cfg.lr_generator)

    return {"loss_d": loss_d, "loss_g": loss_g, "mse": float(np.mean((generated - target) ** 2))}


def _check_validation(model: CganModel, dataset: Dataset, validation: Dataset):
    if len(validation) == 0:
        raise InvalidArgumentError("validation set is empty")
    if validation.link != model.link or not validation.metadata.get("prepared"):
        raise InvalidArgumentError("validation set must be a prepared set of the model's link")
    if validation.R.shape[1:] != dataset.R.shape[1:] or validation.O.shape[1:] != dataset.O.shape[1:]:
        raise InvalidDimensionError("validation pairs do not match the training pairs")


def train(model: CganModel, dataset: Dataset, train_cfg: TrainConfig, on_epoch=None,
          validation: Dataset | None = None) -> CganModel:
    """
    Adversarial training over shuffled minibatches; one D step then one G
    step per batch. Minibatches with fewer than two pairs are skipped.
    Deterministic given train_cfg.seed.

    With a prepared `validation` set, the generator is scored in eval mode
    after every epoch and the best-scoring generator (running statistics
    included) is kept at the end; the history still covers every epoch.
    """
    if len(dataset) == 0:
        raise InvalidArgumentError("training set is empty")
    if len(dataset) < 2:
        raise InvalidArgumentError("training needs at least two pairs")
    if train_cfg.batch_size < 2 and train_cfg.epochs > 0:
        raise InvalidArgumentError("batch normalization needs minibatches of at least two pairs")
    if dataset.link != model.link:
        raise InvalidArgumentError(f"dataset link {dataset.link!r} does not match model link {model.link!r}")
    if not dataset.metadata.get("prepared"):
        raise InvalidArgumentError("dataset must be standardized and rho-scaled (see dataset.prepare)")
    if dataset.R.shape[1] != int(np.prod(model.generator.input_shape)) \
            or dataset.O.shape[1] != model.generator.output_shape[0]:
        raise InvalidDimensionError(f"dataset pairs ({dataset.R.shape[1]}, {dataset.O.shape[1]}) "
                                    f"do not fit the model")
    if validation is not None:
        _check_validation(model, dataset, validation)

    rng = np.random.default_rng(train_cfg.seed)
    generator_state = init_adam(model.generator_params)
    discriminator_state = init_adam(model.discriminator_body_params)
    n, b = len(dataset), train_cfg.batch_size
    best_score, best_epoch, best_params = np.inf, 0, None

    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        records = []
        for start in range(0, n, b):
            batch = order[start:start + b]
            if len(batch) < 2:
                continue
            records.append(train_step(model, dataset.R[batch], dataset.O[batch], train_cfg,
                                      generator_state, discriminator_state))
        summary = {"epoch": epoch + 1}
        for key in ("loss_d", "loss_g", "mse"):
            summary[key] = float(np.mean([r[key] for r in records]))
        if validation is not None:
            summary["val_nmse"] = mean_row_nmse(run_generator(model, validation.R), validation.O)
            if summary["val_nmse"] < best_score:
                best_score, best_epoch = summary["val_nmse"], epoch + 1
                best_params = copy_params(model.generator_params)
        model.history.append(summary)
        logger.info("epoch %d/%d  L_D=%.4f  L_G=%.4f  mse=%.3e", epoch + 1, train_cfg.epochs,
                    summary["loss_d"], summary["loss_g"], summary["mse"])
        if on_epoch is not None:
            on_epoch(summary)
    if best_params is not None:
        model.generator_params = best_params
        logger.info("kept the generator from epoch %d (validation NMSE %.3e)", best_epoch, best_score)
    return model


# ==================================================================
# Online estimation
# ==================================================================

def run_generator(model: CganModel, R_standardized: np.ndarray) -> np.ndarray:
    """Eval-mode generator output (scaled channel vectors) for standardized inputs."""
    output, _ = forward(model.generator, model.generator_params,
                        generator_input(model, R_standardized), mode="eval")
    return output


def estimate_batch(model: CganModel, R: np.ndarray) -> np.ndarray:
    """Complex channel estimates for a batch of raw observations."""
    R = np.atleast_2d(np.asarray(R, dtype=np.float64))
    expected = int(np.prod(model.generator.input_shape))
    if R.shape[1] != expected:
        raise InvalidDimensionError(f"raw input length {R.shape[1]}, model expects {expected}")
    scaled = run_generator(model, standardize_rows(R))
    return unstack_real_imag_batch(unscale_target(scaled, model.rho), model.channel_shape)


def estimate(model: CganModel, R: np.ndarray) -> np.ndarray:
    """Complex M x M (sensing) or M x N (comm) estimate from one raw observation."""
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 1:
        raise InvalidDimensionError(f"expected one flat observation, got shape {R.shape}")
    return estimate_batch(model, R[np.newaxis])[0]


# ==================================================================
# Checkpoints
# ==================================================================

def save_model(model: CganModel, path: str, metadata: dict | None = None):
    header = {
        **(metadata or {}),
        "link": model.link, "M": model.M, "N": model.N, "rho": model.rho,
        "generator": model.generator.to_dict(),
        "discriminator": model.discriminator.to_dict(),
        "history": model.history,
    }
    arrays = {**params_to_arrays(model.generator_params, "G"),
              **params_to_arrays(model.discriminator_params, "D")}
    write_container(path, "cgan", header, arrays)
    logger.info("saved %s CGAN checkpoint to %s", model.link, path)


def load_model(path: str) -> tuple[CganModel, dict]:
    metadata, arrays = read_container(path, "cgan")
    try:
        generator = NetworkSpec.from_dict(metadata["generator"])
        discriminator = NetworkSpec.from_dict(metadata["discriminator"])
        model = CganModel(link=metadata["link"], M=metadata["M"], N=metadata["N"],
                          generator=generator, generator_params=params_from_arrays(generator, arrays, "G"),
                          discriminator=discriminator,
                          discriminator_params=params_from_arrays(discriminator, arrays, "D"),
                          rho=metadata["rho"], history=list(metadata.get("history", [])))
    except (KeyError, TypeError) as exc:
        raise ContainerFormatError(f"{path}: malformed CGAN checkpoint ({exc})") from exc
    return model, metadata
