# tests/test_pilot_protocol.py

import numpy as np
import pytest
from numpy.testing import assert_allclose

from isacgan.channel_model import draw_comm_channels, draw_sensing_channel, draw_si_channel
from isacgan.config import SystemConfig
from isacgan.errors import DegenerateInputError, InvalidArgumentError, UnsupportedConfigurationError
from isacgan.pilot_protocol import (build_phase_matrix, build_pilot_matrix, compensate_si,
                                    noise_variance_from_snr, synthesize_bs_rx, synthesize_ue_rx)


@pytest.mark.parametrize("M", range(1, 17))
def test_pilot_matrix_is_orthogonal(M):
    power = 1e-2
    X = build_pilot_matrix(M, M, power)
    gram = X @ X.conj().T
    assert np.linalg.norm(gram - power * np.eye(M)) <= 1e-10 * power * np.sqrt(M)


@pytest.mark.parametrize("N", [1, 4, 7, 16, 30, 50, 64])
def test_phase_matrix_is_unit_modulus_and_orthogonal(N):
    Theta = build_phase_matrix(N, N)
    assert_allclose(np.abs(Theta), 1.0, atol=1e-12)
    assert np.linalg.norm(Theta @ Theta.conj().T - N * np.eye(N)) <= 1e-10 * N


def test_non_square_pilots_are_unsupported():
    with pytest.raises(UnsupportedConfigurationError):
        build_pilot_matrix(4, 3, 1.0)
    with pytest.raises(UnsupportedConfigurationError):
        build_phase_matrix(8, 6)


def test_noiseless_ue_rows_follow_the_phase_sweep(rng):
    config = SystemConfig(M=2, N=4, K=2)
    G_k = draw_comm_channels(config, rng).G[1]
    X = build_pilot_matrix(2, 2, config.tx_power_linear)
    Theta = build_phase_matrix(4, 4)
    received = synthesize_ue_rx(G_k, Theta, X, 0.0, snr_db=None, k=1)
    assert received.Y_ue.shape == (4, 2)
    assert received.k == 1
    for c in range(4):
        assert_allclose(received.Y_ue[c], Theta[:, c].conj() @ G_k.conj().T @ X, atol=1e-18)


def test_noiseless_bs_observation_after_compensation(rng):
    config = SystemConfig(M=4, N=5)
    A = draw_sensing_channel(config, rng).A
    S = draw_si_channel(config).S
    X = build_pilot_matrix(4, 4, config.tx_power_linear)
    received = compensate_si(synthesize_bs_rx(A, S, X, 0.0, None, config.C), S, X)
    expected = A.conj().T @ X
    assert received.Y_bs.shape == (5, 4, 4)
    for frame in received.Y_bs:
        assert np.linalg.norm(frame - expected) <= 1e-10 * np.linalg.norm(expected)


def test_negative_noise_variance_is_rejected(rng):
    X = build_pilot_matrix(2, 2, 1.0)
    with pytest.raises(InvalidArgumentError):
        synthesize_ue_rx(np.ones((2, 3)), build_phase_matrix(3, 3), X, -1.0, rng)
    with pytest.raises(InvalidArgumentError):
        synthesize_bs_rx(np.eye(2), np.eye(2), X, -0.1, rng, 3)


def test_noise_needs_a_generator():
    X = build_pilot_matrix(2, 2, 1.0)
    with pytest.raises(InvalidArgumentError, match="generator"):
        synthesize_ue_rx(np.ones((2, 3)), build_phase_matrix(3, 3), X, 0.5, None)
    with pytest.raises(InvalidArgumentError, match="generator"):
        synthesize_bs_rx(np.eye(2), np.eye(2), X, 0.5, None, 3)
    # noiseless synthesis does not draw
    assert synthesize_bs_rx(np.eye(2), np.eye(2), X, 0.0, None, 3).Y_bs.shape == (3, 2, 2)


def test_ue_noise_has_requested_variance(rng):
    G_k = np.ones((4, 16), dtype=complex)
    X = build_pilot_matrix(4, 4, 1.0)
    Theta = build_phase_matrix(16, 16)
    clean = synthesize_ue_rx(G_k, Theta, X, 0.0).Y_ue
    residuals = np.concatenate([
        (synthesize_ue_rx(G_k, Theta, X, 0.25, rng).Y_ue - clean).ravel() for _ in range(200)
    ])
    assert np.mean(np.abs(residuals) ** 2) == pytest.approx(0.25, rel=0.05)


def test_noise_variance_from_snr():
    assert noise_variance_from_snr(np.ones((2, 3)), 10.0) == pytest.approx(0.1)
    assert noise_variance_from_snr(2.0 * np.ones((2, 2)), 0.0) == pytest.approx(4.0)


def test_noise_variance_of_zero_channel_is_undefined():
    with pytest.raises(DegenerateInputError):
        noise_variance_from_snr(np.zeros((2, 2)), 10.0)
