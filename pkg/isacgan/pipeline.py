# isacgan/pipeline.py

"""
ISACGAN - Pipeline plumbing shared by the commands

Artifact naming, dataset loading with provenance checks, the seeded
train/test split, model training, the estimator table and the NMSE
evaluations (Monte-Carlo over an SNR grid and per-SNR on the held-out
split). Estimators only ever receive raw observations; ground truth is
used to score them.
"""
import dataclasses
import logging
import os
from dataclasses import dataclass

import numpy as np

from isacgan import __version__
from isacgan.baselines import (ElmModel, FfnModel, elm_baseline, ffn_baseline, load_elm, load_ffn,
                               ls_from_inputs, nmse_batch, nmse_mc, save_elm, save_ffn)
from isacgan.cgan import (CganModel, build_cgan, ce_discriminator_spec, ce_generator_spec, estimate_batch,
                          load_model, save_model, se_generator_spec, train)
from isacgan.channel_model import draw_si_channel
from isacgan.config import RunConfig
from isacgan.dataset import Dataset, draw_pair, generate_dataset, load_dataset, prepare, split
from isacgan.errors import ConfigError, ConfigMismatchError, MissingArtifactError, UnsupportedConfigurationError
from isacgan.pilot_protocol import build_phase_matrix, build_pilot_matrix
from isacgan.reports import NmseReport
from isacgan.utils import unstack_real_imag_batch

logger = logging.getLogger(__name__)

SPLIT_STREAM = 0x5B
INIT_STREAM = 0x1D
MC_STREAM = 0x3C
VALIDATION_STREAM = 0x7A

CGAN_NAMES = {"sensing": "SE-CGAN", "comm": "CE-CGAN"}


# ==================================================================
# Artifacts
# ==================================================================

@dataclass(frozen=True)
class Artifacts:
    dataset: str
    cgan: str
    ffn: str
    elm: str
    nmse: str
    split: str
    sweep: str

    @classmethod
    def of(cls, run_config: RunConfig) -> "Artifacts":
        tag = run_config.link_tag
        return cls(
            dataset=run_config.path(f"dataset_{tag}.isac"),
            cgan=run_config.path(f"cgan_{tag}.ckpt"),
            ffn=run_config.path(f"ffn_{tag}.ckpt"),
            elm=run_config.path(f"elm_{tag}.ckpt"),
            nmse=run_config.path(f"nmse_{tag}.csv"),
            split=run_config.path(f"split_{tag}.csv"),
            sweep=run_config.path(f"sweep_{tag}_{run_config.sweep_variable}.csv"),
        )


def provenance(run_config: RunConfig) -> dict:
    return {
        "seed": run_config.seed,
        "config_hash": run_config.config_hash(),
        "version": __version__,
        "experiment_id": run_config.experiment_id,
    }


def _require(path: str, what: str):
    if not os.path.exists(path):
        raise MissingArtifactError(f"{what} {path} not found; run the upstream command first")


def _check_hash(metadata: dict, run_config: RunConfig, path: str):
    stored = metadata.get("config_hash")
    if stored != run_config.config_hash():
        raise ConfigMismatchError(f"{path} was produced with config {stored}, "
                                  f"current config is {run_config.config_hash()}")


# ==================================================================
# Data
# ==================================================================

def generate(run_config: RunConfig) -> Dataset:
    dataset = generate_dataset(run_config.system, run_config.train_snr_db, run_config.Q, run_config.V,
                               run_config.link, seed=run_config.seed, user=run_config.user,
                               workers=run_config.workers)
    dataset.metadata["config_hash"] = run_config.config_hash()
    return dataset


def load_checked_dataset(run_config: RunConfig) -> Dataset:
    path = Artifacts.of(run_config).dataset
    _require(path, "dataset")
    dataset = load_dataset(path)
    _check_hash(dataset.metadata, run_config, path)
    return dataset


def split_raw(run_config: RunConfig, dataset: Dataset) -> tuple[Dataset, Dataset]:
    """Raw (unprepared) train/test split; identical for every command given the seed."""
    rng = np.random.default_rng([run_config.seed, SPLIT_STREAM])
    return split(dataset, run_config.test_fraction, rng)


# ==================================================================
# Models
# ==================================================================

@dataclass
class TrainedModels:
    cgan: CganModel
    ffn: FfnModel
    elm: ElmModel


def _init_rng(run_config: RunConfig, index: int) -> np.random.Generator:
    return np.random.default_rng([run_config.seed, INIT_STREAM, index])


def fit_and_validation(run_config: RunConfig, train_set: Dataset) -> tuple[Dataset, Dataset | None]:
    """Seeded hold-out of the prepared training pairs used to pick the best epoch."""
    fraction = run_config.train.validation_fraction
    if fraction == 0.0 or len(train_set) < 4:
        return train_set, None
    fit, validation = split(train_set, fraction, np.random.default_rng([run_config.seed, VALIDATION_STREAM]))
    return fit, validation


def train_models(run_config: RunConfig, train_raw: Dataset, on_epoch=None,
                 on_ffn_epoch=None) -> TrainedModels:
    """CGAN, FFN and ELM on the same fit pairs; the two networks share the validation pairs."""
    fit_set, validation = fit_and_validation(run_config, prepare(train_raw, run_config.system.rho))
    model = build_cgan(run_config.system, run_config.link, _init_rng(run_config, 0))
    train(model, fit_set, run_config.train, on_epoch, validation)
    ffn = ffn_baseline(fit_set, run_config.system, run_config.train, _init_rng(run_config, 1),
                       on_ffn_epoch, validation)
    elm = elm_baseline(fit_set, run_config.system, _init_rng(run_config, 2))
    return TrainedModels(cgan=model, ffn=ffn, elm=elm)


def save_models(run_config: RunConfig, models: TrainedModels):
    paths = Artifacts.of(run_config)
    metadata = provenance(run_config)
    save_model(models.cgan, paths.cgan, metadata)
    save_ffn(models.ffn, paths.ffn, metadata)
    save_elm(models.elm, paths.elm, metadata)


def load_models(run_config: RunConfig) -> TrainedModels:
    paths = Artifacts.of(run_config)
    loaded = []
    for path, loader in ((paths.cgan, load_model), (paths.ffn, load_ffn), (paths.elm, load_elm)):
        _require(path, "checkpoint")
        model, metadata = loader(path)
        _check_hash(metadata, run_config, path)
        loaded.append(model)
    return TrainedModels(*loaded)


def estimators(run_config: RunConfig, models: TrainedModels) -> dict:
    """Method name -> function mapping a batch of raw inputs to complex estimates."""
    system = run_config.system
    X = build_pilot_matrix(system.M, system.P, system.tx_power_linear)
    Theta = build_phase_matrix(system.N, system.C) if run_config.link == "comm" else None
    return {
        CGAN_NAMES[run_config.link]: lambda R: estimate_batch(models.cgan, R),
        "LS": lambda R: ls_from_inputs(R, run_config.link, system, X, Theta),
        "FFN": models.ffn.estimate_batch,
        "ELM": models.elm.estimate_batch,
    }


# ==================================================================
# Evaluation
# ==================================================================

def channel_shape(run_config: RunConfig) -> tuple[int, int]:
    M, N = run_config.system.M, run_config.system.N
    return (M, M) if run_config.link == "sensing" else (M, N)


def monte_carlo_nmse(run_config: RunConfig, estimator, snr_db: float, trials: int) -> float:
    """
    Mean NMSE over fresh scenarios at one SNR.

    The scenario streams depend on the seed alone: every method, command and
    SNR point sees the same channel draws and the same unit-variance noise,
    scaled to the SNR. Curves across the grid differ only through the noise
    level. The self-interference channel is drawn once.
    """
    shape = channel_shape(run_config)
    system = run_config.system
    S = draw_si_channel(system).S if run_config.link == "sensing" else None

    def scenario(rng):
        pair = draw_pair(system, run_config.link, snr_db, rng, run_config.user, S=S)
        return pair.R, unstack_real_imag_batch(pair.O, shape)[0]

    rng = np.random.default_rng([run_config.seed, MC_STREAM])
    return nmse_mc(lambda R: estimator(R[np.newaxis])[0], scenario, trials, rng, run_config.workers)


def evaluate_grid(run_config: RunConfig, methods: dict, snr_grid, trials: int,
                  on_point=None) -> NmseReport:
    report = NmseReport(link=run_config.link, variable="snr_db",
                        metadata={"trials": trials, **provenance(run_config)})
    for snr_db in snr_grid:
        for name, estimator in methods.items():
            report.add(snr_db, name, monte_carlo_nmse(run_config, estimator, snr_db, trials))
        if on_point is not None:
            on_point(snr_db)
    return report


def evaluate_split(run_config: RunConfig, methods: dict, test_raw: Dataset) -> NmseReport:
    """Mean NMSE of each method on the held-out pairs, grouped by their SNR."""
    truth = unstack_real_imag_batch(test_raw.O, channel_shape(run_config))
    report = NmseReport(link=run_config.link, variable="snr_db",
                        metadata={"pairs": len(test_raw), **provenance(run_config)})
    estimates = {name: estimator(test_raw.R) for name, estimator in methods.items()}
    for snr_db in np.unique(test_raw.snr_db):
        mask = test_raw.snr_db == snr_db
        for name, estimate in estimates.items():
            report.add(snr_db, name, float(np.mean(nmse_batch(estimate[mask], truth[mask]))))
    return report


def sweep_config(run_config: RunConfig, value: int) -> RunConfig:
    """The run config with M or N replaced by `value`."""
    system = dataclasses.replace(run_config.system, **{run_config.sweep_variable: value})
    return dataclasses.replace(run_config, system=system)


def check_architecture(run_config: RunConfig):
    """Raises UnsupportedConfigurationError when the link's CGAN cannot be built at these sizes."""
    system = run_config.system
    if run_config.link == "sensing":
        se_generator_spec(system.M)
    else:
        ce_generator_spec(system.M, system.N)
        ce_discriminator_spec(system.M, system.N)


def sweep(run_config: RunConfig, on_value=None) -> NmseReport:
    """
    Regenerates, retrains and scores every method for each value of the
    sweep variable at the sweep SNR levels. All values are validated before
    any work starts.
    """
    variable = run_config.sweep_variable
    configs = []
    for value in run_config.sweep_values:
        try:
            swept = sweep_config(run_config, value)
        except ConfigError as exc:
            raise UnsupportedConfigurationError(f"{variable}={value} is infeasible: {exc}") from exc
        check_architecture(swept)
        configs.append(swept)

    report = NmseReport(link=run_config.link, variable=variable,
                        metadata={"trials": run_config.trials, **provenance(run_config)})
    for value, swept in zip(run_config.sweep_values, configs):
        train_raw, _ = split_raw(swept, generate(swept))
        methods = estimators(swept, train_models(swept, train_raw))
        for snr_db in run_config.sweep_snr_db:
            for name, estimator in methods.items():
                report.add(value, name, monte_carlo_nmse(swept, estimator, snr_db, run_config.trials),
                           snr_db=snr_db)
        logger.info("sweep %s=%d done", variable, value)
        if on_value is not None:
            on_value(value)
    return report
