# tests/test_neural_engine.py

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from isacgan.errors import InvalidDimensionError, UnsupportedStructureError
from isacgan.neural_engine import (BatchNorm, Conv1d, Dense, Flatten, LeakyReLU, NetworkSpec, Sigmoid,
                                   adam_step, backward, copy_params, count_operations, fold_batchnorm,
                                   forward, gradient_check, inference_spec, init_adam, init_params,
                                   load_network, predict, relative_error, save_network)

ARCHITECTURES = {
    "dense": (NetworkSpec([Dense(3, 4)], (3,)), (5, 3)),
    "dense_bn": (NetworkSpec([Dense(3, 4), BatchNorm(4)], (3,)), (5, 3)),
    "leaky": (NetworkSpec([Dense(3, 4), LeakyReLU(0.2), Dense(4, 2)], (3,)), (4, 3)),
    "sigmoid": (NetworkSpec([Dense(3, 2), Sigmoid()], (3,)), (4, 3)),
    "conv": (NetworkSpec([Conv1d(2, 3, 3)], (7, 2)), (3, 7, 2)),
    "conv_stride": (NetworkSpec([Conv1d(2, 3, 2, stride=2)], (7, 2)), (3, 7, 2)),
    "conv_bn_flatten": (NetworkSpec([Conv1d(2, 3, 3), BatchNorm(3), LeakyReLU(0.2), Flatten(), Dense(15, 2)],
                                    (7, 2)), (4, 7, 2)),
}


def _randomized(spec, rng):
    """Initial params with non-trivial bias, scale and shift."""
    params = init_params(spec, rng)
    for layer in params:
        for key in ("bias", "shift"):
            if key in layer:
                layer[key] = 0.3 * rng.standard_normal(layer[key].shape)
        if "scale" in layer:
            layer["scale"] = 1.0 + 0.3 * rng.standard_normal(layer["scale"].shape)
    return params


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("name", sorted(ARCHITECTURES))
def test_backprop_matches_finite_differences(name, seed):
    spec, input_shape = ARCHITECTURES[name]
    rng = np.random.default_rng(seed)
    params = _randomized(spec, rng)
    errors = gradient_check(spec, params, rng.standard_normal(input_shape), rng)
    assert "input" in errors
    assert max(errors.values()) < 1e-5, errors


def test_bias_before_batchnorm_has_a_zero_gradient():
    spec, input_shape = ARCHITECTURES["dense_bn"]
    rng = np.random.default_rng(4)
    params = _randomized(spec, rng)
    errors = gradient_check(spec, params, rng.standard_normal(input_shape), rng)
    assert errors["0.dense.bias"] == 0.0


def test_relative_error_examples():
    assert relative_error(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert relative_error(np.array([1.0]), np.array([-1.0])) == pytest.approx(1.0)
    # rounding noise on both sides
    assert relative_error(np.array([3e-12, -1e-12]), np.array([-2e-11, 5e-12])) == 0.0
    # a real gradient missed by backprop is still reported
    assert relative_error(np.zeros(3), np.array([0.0, 1e-3, 0.0])) == pytest.approx(1.0)


def test_gradient_check_covers_every_learnable_array():
    spec, input_shape = ARCHITECTURES["conv_bn_flatten"]
    rng = np.random.default_rng(0)
    errors = gradient_check(spec, init_params(spec, rng), rng.standard_normal(input_shape), rng)
    assert set(errors) == {"input", "0.conv1d.weight", "0.conv1d.bias", "1.batchnorm.scale",
                           "1.batchnorm.shift", "4.dense.weight", "4.dense.bias"}


def test_dense_forward_values():
    spec = NetworkSpec([Dense(2, 1)], (2,))
    params = [{"weight": np.array([[2.0], [-1.0]]), "bias": np.array([0.5])}]
    assert_allclose(predict(spec, params, np.array([[1.0, 3.0]])), [[-0.5]])


def test_leaky_relu_values():
    spec = NetworkSpec([LeakyReLU(0.2)], (3,))
    assert_allclose(predict(spec, [{}], np.array([[1.0, 0.0, -1.0]])), [[1.0, 0.0, -0.2]])


def test_conv_output_length_and_values():
    conv = Conv1d(1, 1, 2)
    spec = NetworkSpec([conv], (4, 1))
    params = [{"weight": np.array([[[1.0]], [[10.0]]]), "bias": np.array([0.0])}]
    out = predict(spec, params, np.arange(4.0).reshape(1, 4, 1))
    assert_allclose(out[0, :, 0], [10.0, 21.0, 32.0])
    assert Conv1d(8, 132, 4).output_length(30) == 27
    assert Conv1d(1, 1, 4, stride=3).output_length(30) == 9


def test_conv_kernel_longer_than_input_is_rejected():
    with pytest.raises(InvalidDimensionError):
        NetworkSpec([Conv1d(1, 2, 5)], (4, 1))


def test_batchnorm_train_mode_normalizes(rng):
    spec = NetworkSpec([BatchNorm(3)], (3,))
    params = init_params(spec, rng)
    out, _ = forward(spec, params, 4.0 + 2.0 * rng.standard_normal((64, 3)))
    assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
    assert_allclose(out.var(axis=0), 1.0, rtol=1e-4)


def test_running_statistics_follow_the_momentum(rng):
    spec = NetworkSpec([BatchNorm(2)], (2,))
    params = init_params(spec, rng)
    x = rng.standard_normal((10, 2))
    forward(spec, params, x, track_running_stats=False)
    assert_array_equal(params[0]["running_mean"], 0.0)
    forward(spec, params, x)
    assert_allclose(params[0]["running_mean"], 0.1 * x.mean(axis=0))
    assert_allclose(params[0]["running_var"], 0.9 + 0.1 * x.var(axis=0))


def test_eval_mode_uses_running_statistics(rng):
    spec = NetworkSpec([BatchNorm(2)], (2,))
    params = init_params(spec, rng)
    params[0]["running_mean"] = np.array([1.0, -1.0])
    params[0]["running_var"] = np.array([4.0, 0.25])
    out = predict(spec, params, np.array([[3.0, 0.0]]))
    assert_allclose(out, [[2.0 / np.sqrt(4.0 + 1e-5), 1.0 / np.sqrt(0.25 + 1e-5)]])


def test_input_shape_is_checked(rng):
    spec = NetworkSpec([Dense(3, 2)], (3,))
    with pytest.raises(InvalidDimensionError):
        forward(spec, init_params(spec, rng), np.ones((2, 4)))


@pytest.mark.parametrize("name", ["dense_bn", "conv_bn_flatten"])
def test_folding_preserves_eval_outputs(name, rng):
    spec, input_shape = ARCHITECTURES[name]
    params = _randomized(spec, rng)
    for layer in params:
        if "running_mean" in layer:
            layer["running_mean"] = rng.standard_normal(layer["running_mean"].shape)
            layer["running_var"] = rng.uniform(0.5, 2.0, layer["running_var"].shape)
    folded_spec, folded = fold_batchnorm(spec, params)
    assert not any(isinstance(layer, BatchNorm) for layer in folded_spec.layers)
    x = rng.standard_normal(input_shape)
    assert_allclose(predict(folded_spec, folded, x), predict(spec, params, x), rtol=1e-10, atol=1e-12)


def test_folding_needs_a_preceding_affine_layer():
    with pytest.raises(UnsupportedStructureError):
        inference_spec(NetworkSpec([BatchNorm(3)], (3,)))
    with pytest.raises(UnsupportedStructureError):
        inference_spec(NetworkSpec([Dense(3, 3), LeakyReLU(0.2), BatchNorm(3)], (3,)))


def test_counting_refuses_batchnorm():
    with pytest.raises(UnsupportedStructureError):
        count_operations(NetworkSpec([Dense(3, 3), BatchNorm(3)], (3,)))


def test_counting_rules():
    assert count_operations(NetworkSpec([Dense(32, 100)], (32,))) == (3300, 3200)
    conv = NetworkSpec([Conv1d(8, 132, 4), LeakyReLU(0.2), Flatten()], (30, 8))
    assert count_operations(conv) == (5 * 27 * 132, 4 * 27 * 132)


@pytest.mark.parametrize("g", [0.1, -0.5, 3.0, -20.0])
def test_first_adam_step_moves_by_the_learning_rate(g):
    params = [{"weight": np.array([1.0, -2.0])}]
    state = init_adam(params)
    lr = 1e-3
    before = params[0]["weight"].copy()
    adam_step(params, [{"weight": np.full(2, g)}], state, lr)
    assert np.all(np.abs((params[0]["weight"] - before) + lr * np.sign(g)) <= 1e-6 * lr)
    assert state.t == 1


def test_adam_ignores_buffers_and_checks_shapes(rng):
    spec = NetworkSpec([Dense(3, 2), BatchNorm(2)], (3,))
    params = init_params(spec, rng)
    state = init_adam(params)
    assert "running_mean" not in state.m[1]
    with pytest.raises(InvalidDimensionError):
        adam_step(params, [{"weight": np.ones((2, 3))}, {}], state, 1e-3)


def test_zero_learning_rate_leaves_parameters(rng):
    spec, input_shape = ARCHITECTURES["leaky"]
    params = init_params(spec, rng)
    reference = copy_params(params)
    out, cache = forward(spec, params, rng.standard_normal(input_shape))
    adam_step(params, backward(spec, params, cache, np.ones_like(out)), init_adam(params), 0.0)
    for layer, original in zip(params, reference):
        for key in layer:
            assert_array_equal(layer[key], original[key])


def test_spec_serialization(rng, tmp_path):
    spec, input_shape = ARCHITECTURES["conv_bn_flatten"]
    assert NetworkSpec.from_dict(spec.to_dict()) == spec
    params = _randomized(spec, rng)
    path = str(tmp_path / "net.ckpt")
    save_network(path, spec, params, {"tag": "t"})
    loaded_spec, loaded, metadata = load_network(path)
    assert loaded_spec == spec and metadata["tag"] == "t"
    x = rng.standard_normal(input_shape)
    assert_array_equal(predict(loaded_spec, loaded, x), predict(spec, params, x))
