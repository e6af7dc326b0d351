# isacgan/pilot_protocol.py

"""
ISACGAN - Pilot Protocol

DFT pilot and RIS phase matrices, received-signal synthesis at UE_k and at
the ISAC BS, and self-interference compensation.

The BS sends the same M x P pilot block X in each of the C sub-frames; the
RIS holds phase vector theta_c (column c of Theta) for a whole sub-frame.
"""
from dataclasses import dataclass, replace

import numpy as np

from isacgan.errors import (DegenerateInputError, InvalidArgumentError,
                            InvalidDimensionError, UnsupportedConfigurationError)
from isacgan.utils import complex_normal, db_to_linear, frobenius_power


@dataclass(frozen=True)
class ReceivedUE:
    Y_ue: np.ndarray       # C x P; row c is sub-frame c
    snr_db: float | None
    k: int


@dataclass(frozen=True)
class ReceivedBS:
    Y_bs: np.ndarray       # C x M x P
    snr_db: float | None


def _dft(size: int, cols: int) -> np.ndarray:
    idx = np.arange(size)
    return np.exp(1j * 2.0 * np.pi * np.outer(idx, np.arange(cols)) / size)


def build_pilot_matrix(M: int, P: int, tx_power_linear: float) -> np.ndarray:
    """X[m, p] = sqrt(P_tx / M) exp(j 2 pi m p / M), so X X^H = P_tx I_M."""
    if M < 1:
        raise InvalidDimensionError(f"pilot matrix needs M >= 1, got {M}")
    if P != M:
        raise UnsupportedConfigurationError(f"only square DFT pilots are supported (P={P}, M={M})")
    if tx_power_linear < 0:
        raise InvalidArgumentError(f"transmit power must be >= 0, got {tx_power_linear}")
    return np.sqrt(tx_power_linear / M) * _dft(M, P)


def build_phase_matrix(N: int, C: int) -> np.ndarray:
    """Theta[n, c] = exp(j 2 pi n c / N), unit-modulus (beta = 1)."""
    if N < 1:
        raise InvalidDimensionError(f"phase matrix needs N >= 1, got {N}")
    if C != N:
        raise UnsupportedConfigurationError(f"only square DFT phase sweeps are supported (C={C}, N={N})")
    return _dft(N, C)


def _check_noise(sigma2: float, rng):
    if sigma2 < 0:
        raise InvalidArgumentError(f"noise variance must be >= 0, got {sigma2}")
    if sigma2 > 0 and rng is None:
        raise InvalidArgumentError("a random generator is required when sigma2 > 0")


def synthesize_ue_rx(G_k: np.ndarray, Theta: np.ndarray, X: np.ndarray, sigma2: float,
                     rng: np.random.Generator | None = None, snr_db: float | None = None,
                     k: int = 0) -> ReceivedUE:
    """Row c = theta_c^H G_k^H X + n_c."""
    _check_noise(sigma2, rng)
    M, N = G_k.shape
    if Theta.shape[0] != N or X.shape[0] != M:
        raise InvalidDimensionError(f"G_k{G_k.shape}, Theta{Theta.shape}, X{X.shape} do not agree")
    Y = Theta.conj().T @ G_k.conj().T @ X
    if sigma2 > 0:
        Y = Y + complex_normal(rng, Y.shape, sigma2)
    return ReceivedUE(Y_ue=Y, snr_db=snr_db, k=k)


def synthesize_bs_rx(A: np.ndarray, S: np.ndarray, X: np.ndarray, sigma2: float,
                     rng: np.random.Generator | None, C: int,
                     snr_db: float | None = None) -> ReceivedBS:
    """Y_c = A^H X + S^H X + N_c for c = 1..C; sub-frames differ only in noise."""
    _check_noise(sigma2, rng)
    if A.shape != S.shape or A.shape[0] != X.shape[0]:
        raise InvalidDimensionError(f"A{A.shape}, S{S.shape}, X{X.shape} do not agree")
    if C < 1:
        raise InvalidDimensionError(f"need at least one sub-frame, got C={C}")
    clean = A.conj().T @ X + S.conj().T @ X
    Y = np.repeat(clean[np.newaxis], C, axis=0)
    if sigma2 > 0:
        Y = Y + complex_normal(rng, Y.shape, sigma2)
    return ReceivedBS(Y_bs=Y, snr_db=snr_db)


def compensate_si(received: ReceivedBS, S: np.ndarray, X: np.ndarray) -> ReceivedBS:
    """Removes the known S^H X term from every sub-frame."""
    return replace(received, Y_bs=received.Y_bs - (S.conj().T @ X)[np.newaxis])


def noise_variance_from_snr(channel: np.ndarray, snr_db: float) -> float:
    """sigma^2 = p_ch / 10^(SNR/10) with p_ch the average per-entry channel power."""
    power = frobenius_power(channel)
    if power == 0.0:
        raise DegenerateInputError("channel has zero power; SNR is undefined")
    return power / db_to_linear(snr_db)
