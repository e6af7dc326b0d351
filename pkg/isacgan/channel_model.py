# isacgan/channel_model.py

"""
ISACGAN - Channel Model

Random channel realizations for the RIS-assisted ISAC scenario: the rank-1
BS-target-BS sensing channel, Rician BS-RIS / RIS-UE links, the cascaded
BS-RIS-UE channel and the (known) self-interference channel.

All draws take an explicit numpy Generator; nothing here keeps state.
"""
from dataclasses import dataclass

import numpy as np

from isacgan.config import SystemConfig
from isacgan.errors import InvalidArgumentError, InvalidDimensionError
from isacgan.utils import complex_normal, db_to_linear

# Stream id for the self-interference channel; it depends on the config seed only.
SI_STREAM = 0x51


@dataclass(frozen=True)
class SensingChannel:
    A: np.ndarray          # M x M, A = mu * a a^H
    mu: complex


@dataclass(frozen=True)
class CommChannels:
    H: np.ndarray          # M x N
    r: np.ndarray          # K x N, row k is r_k
    G: np.ndarray          # K x M x N, G[k] = H diag(r_k)


@dataclass(frozen=True)
class SelfInterferenceChannel:
    S: np.ndarray          # M x M


def steering_vector(theta: float, M: int, spacing_ratio: float) -> np.ndarray:
    """Uniform linear array response; entry m is exp(j 2 pi (d/lambda) m sin(theta))."""
    if M < 1:
        raise InvalidDimensionError(f"steering vector needs M >= 1, got {M}")
    m = np.arange(M)
    vector = np.exp(1j * 2.0 * np.pi * spacing_ratio * m * np.sin(theta))
    vector[0] = 1.0
    return vector


def path_loss_linear(d_m: float, zeta: float, pl_ref_dbm: float, d_ref_m: float) -> float:
    """PL = PL_ref * (d / d_ref)^-zeta, as a linear gain."""
    if d_m <= 0 or d_ref_m <= 0:
        raise InvalidArgumentError(f"distances must be positive (d={d_m}, d_ref={d_ref_m})")
    return db_to_linear(pl_ref_dbm) * (d_m / d_ref_m) ** (-zeta)


def draw_sensing_channel(config: SystemConfig, rng: np.random.Generator) -> SensingChannel:
    amplitude = np.sqrt(path_loss_linear(config.d1_m, config.zeta1, config.pl_ref_dbm, config.d_ref_m))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    mu = complex(amplitude * np.exp(1j * phase))
    a = steering_vector(config.theta_target_rad, config.M, config.spacing_ratio)
    return SensingChannel(A=mu * np.outer(a, a.conj()), mu=mu)


def draw_rician_matrix(rows: int, cols: int, K1: float, pl_linear: float,
                       theta_dep: float, theta_arr: float, rng: np.random.Generator,
                       spacing_ratio: float = 0.5) -> np.ndarray:
    """
    sqrt(PL) * (K1/(K1+1) * h_los + 1/(K1+1) * h_nlos).

    The mixing weights are applied without square roots, so the average
    entry power is PL * (K1^2 + 1) / (K1 + 1)^2 rather than PL.
    """
    if K1 < 0:
        raise InvalidArgumentError(f"Rician factor must be >= 0, got {K1}")
    if rows < 1 or cols < 1:
        raise InvalidDimensionError(f"Rician matrix needs positive size, got {rows}x{cols}")
    h_los = np.outer(steering_vector(theta_dep, rows, spacing_ratio),
                     steering_vector(theta_arr, cols, spacing_ratio).conj())
    h_nlos = complex_normal(rng, (rows, cols))
    return np.sqrt(pl_linear) * ((K1 / (K1 + 1.0)) * h_los + (1.0 / (K1 + 1.0)) * h_nlos)


def cascade(H: np.ndarray, r_k: np.ndarray) -> np.ndarray:
    """G_k = H diag(r_k), computed as a column scaling."""
    H = np.asarray(H)
    r_k = np.asarray(r_k).reshape(-1)
    if H.ndim != 2 or H.shape[1] != r_k.shape[0]:
        raise InvalidDimensionError(f"cannot cascade H{H.shape} with r_k of length {r_k.shape[0]}")
    return H * r_k[np.newaxis, :]


def draw_comm_channels(config: SystemConfig, rng: np.random.Generator) -> CommChannels:
    """Draws H, then r_1..r_K, and forms every cascaded G_k."""
    pl_ris = path_loss_linear(config.d2_m, config.zeta2, config.pl_ref_dbm, config.d_ref_m)
    pl_ue = path_loss_linear(config.d3_m, config.zeta3, config.pl_ref_dbm, config.d_ref_m)
    H = draw_rician_matrix(config.M, config.N, config.k1_ris, pl_ris,
                           config.theta_aod_rad, config.theta_aoa_rad, rng, config.spacing_ratio)
    r = np.stack([
        draw_rician_matrix(config.N, 1, config.k1_ue, pl_ue,
                           config.theta_aod_rad, config.theta_aoa_rad, rng, config.spacing_ratio)[:, 0]
        for _ in range(config.K)
    ])
    G = np.stack([cascade(H, r_k) for r_k in r])
    return CommChannels(H=H, r=r, G=G)


def draw_si_channel(config: SystemConfig, rng: np.random.Generator | None = None) -> SelfInterferenceChannel:
    """
    Self-interference channel with i.i.d. CN(0, si_gain^2) entries.

    Without an explicit generator the draw comes from a stream derived from
    the config seed alone, so S stays fixed for a given seed.
    """
    if rng is None:
        rng = np.random.default_rng([config.seed, SI_STREAM])
    return SelfInterferenceChannel(S=config.si_gain * complex_normal(rng, (config.M, config.M)))
