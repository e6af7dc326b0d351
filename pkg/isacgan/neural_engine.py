# isacgan/neural_engine.py

"""
ISACGAN - Minimal neural network engine

Dense / 1-D convolution / batch normalization / LeakyReLU / flatten /
sigmoid layers with exact backpropagation in float64, Adam, batch-norm
folding for inference, operation counting and finite-difference gradient
checks.

Shapes exclude the batch axis. Dense layers take (features,), Conv1d takes
(length, channels) and produces (length_out, filters), with
length_out = floor((length - kernel) / stride) + 1 (no padding).

Parameters are a list with one dict per layer. Learnable entries are
`weight`, `bias`, `scale` and `shift`; batch-norm `running_mean` and
`running_var` are buffers that only the forward pass in train mode updates.
"""
import copy
import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from isacgan.container import read_container, write_container
from isacgan.errors import (ContainerFormatError, InvalidArgumentError, InvalidDimensionError,
                            UnsupportedStructureError)

logger = logging.getLogger(__name__)

LEARNABLE = ("weight", "bias", "scale", "shift")

Parameters = list[dict[str, np.ndarray]]


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# ==================================================================
# Layers
# ==================================================================

class Layer:
    """Base class: a stateless description of one layer."""

    kind = "layer"

    def output_shape(self, in_shape: tuple) -> tuple:
        return in_shape

    def init_params(self, in_shape: tuple, rng: np.random.Generator) -> dict:
        return {}

    def forward(self, params: dict, x: np.ndarray, train: bool, track: bool):
        raise NotImplementedError

    def backward(self, params: dict, cache, dy: np.ndarray):
        """Returns (dx, grads) with grads keyed like the learnable params."""
        raise NotImplementedError

    def count_ops(self, in_shape: tuple) -> tuple[int, int]:
        return 0, 0


@dataclass(frozen=True)
class Dense(Layer):
    in_features: int
    out_features: int
    kind = "dense"

    def __post_init__(self):
        if self.in_features < 1 or self.out_features < 1:
            raise InvalidDimensionError(f"dense layer needs positive sizes, got {self}")

    def output_shape(self, in_shape):
        if in_shape != (self.in_features,):
            raise InvalidDimensionError(f"dense({self.in_features}->{self.out_features}) got input {in_shape}")
        return (self.out_features,)

    def init_params(self, in_shape, rng):
        return {
            "weight": _glorot(rng, (self.in_features, self.out_features), self.in_features, self.out_features),
            "bias": np.zeros(self.out_features),
        }

    def forward(self, params, x, train, track):
        return x @ params["weight"] + params["bias"], x

    def backward(self, params, cache, dy):
        x = cache
        return dy @ params["weight"].T, {"weight": x.T @ dy, "bias": dy.sum(axis=0)}

    def count_ops(self, in_shape):
        return self.out_features * (self.in_features + 1), self.in_features * self.out_features


@dataclass(frozen=True)
class Conv1d(Layer):
    in_channels: int
    filters: int
    kernel: int
    stride: int = 1
    kind = "conv1d"

    def __post_init__(self):
        if min(self.in_channels, self.filters, self.kernel) < 1 or self.stride < 1:
            raise InvalidDimensionError(f"conv1d needs positive sizes and stride >= 1, got {self}")

    def output_length(self, length: int) -> int:
        return (length - self.kernel) // self.stride + 1

    def output_shape(self, in_shape):
        if len(in_shape) != 2 or in_shape[1] != self.in_channels:
            raise InvalidDimensionError(f"conv1d expects (length, {self.in_channels}), got {in_shape}")
        if in_shape[0] < self.kernel:
            raise InvalidDimensionError(f"conv1d kernel {self.kernel} exceeds input length {in_shape[0]}")
        return (self.output_length(in_shape[0]), self.filters)

    def init_params(self, in_shape, rng):
        fan_in = self.kernel * self.in_channels
        fan_out = self.kernel * self.filters
        return {
            "weight": _glorot(rng, (self.kernel, self.in_channels, self.filters), fan_in, fan_out),
            "bias": np.zeros(self.filters),
        }

    def forward(self, params, x, train, track):
        # (batch, length_out, channels, kernel)
        windows = sliding_window_view(x, self.kernel, axis=1)[:, ::self.stride]
        y = np.einsum("blck,kcf->blf", windows, params["weight"], optimize=True) + params["bias"]
        return y, (x.shape, windows)

    def backward(self, params, cache, dy):
        x_shape, windows = cache
        weight = params["weight"]
        length_out = dy.shape[1]
        dx = np.zeros(x_shape)
        span = self.stride * (length_out - 1) + 1
        for tap in range(self.kernel):
            dx[:, tap:tap + span:self.stride, :] += dy @ weight[tap].T
        grads = {
            "weight": np.einsum("blck,blf->kcf", windows, dy, optimize=True),
            "bias": dy.sum(axis=(0, 1)),
        }
        return dx, grads

    def count_ops(self, in_shape):
        # Taps are counted along the sequence axis: (F_z + 1) eta_F F_n adds, F_z eta_F F_n mults.
        eta_f = self.output_length(in_shape[0])
        return (self.kernel + 1) * eta_f * self.filters, self.kernel * eta_f * self.filters


@dataclass(frozen=True)
class BatchNorm(Layer):
    features: int
    momentum: float = 0.1
    eps: float = 1e-5
    kind = "batchnorm"

    def __post_init__(self):
        if self.features < 1:
            raise InvalidDimensionError(f"batchnorm needs positive feature count, got {self.features}")

    def output_shape(self, in_shape):
        if in_shape[-1] != self.features:
            raise InvalidDimensionError(f"batchnorm({self.features}) got input {in_shape}")
        return in_shape

    def init_params(self, in_shape, rng):
        return {
            "scale": np.ones(self.features),
            "shift": np.zeros(self.features),
            "running_mean": np.zeros(self.features),
            "running_var": np.ones(self.features),
        }

    def forward(self, params, x, train, track):
        axes = tuple(range(x.ndim - 1))
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            if track:
                params["running_mean"] = (1.0 - self.momentum) * params["running_mean"] + self.momentum * mean
                params["running_var"] = (1.0 - self.momentum) * params["running_var"] + self.momentum * var
        else:
            mean, var = params["running_mean"], params["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = (x - mean) * inv_std
        count = int(np.prod([x.shape[a] for a in axes]))
        return params["scale"] * x_hat + params["shift"], (train, x_hat, inv_std, count, axes)

    def backward(self, params, cache, dy):
        train, x_hat, inv_std, count, axes = cache
        grads = {"scale": (dy * x_hat).sum(axis=axes), "shift": dy.sum(axis=axes)}
        d_xhat = dy * params["scale"]
        if not train:
            return d_xhat * inv_std, grads
        dx = (inv_std / count) * (count * d_xhat - d_xhat.sum(axis=axes)
                                  - x_hat * (d_xhat * x_hat).sum(axis=axes))
        return dx, grads


@dataclass(frozen=True)
class LeakyReLU(Layer):
    gamma: float = 0.2
    kind = "leaky_relu"

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidArgumentError(f"LeakyReLU slope must lie in (0, 1), got {self.gamma}")

    def forward(self, params, x, train, track):
        positive = x > 0
        return np.where(positive, x, self.gamma * x), positive

    def backward(self, params, cache, dy):
        return np.where(cache, dy, self.gamma * dy), {}


@dataclass(frozen=True)
class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, params, x, train, track):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params, cache, dy):
        return dy.reshape(cache), {}


@dataclass(frozen=True)
class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, params, x, train, track):
        y = expit(x)
        return y, y

    def backward(self, params, cache, dy):
        return dy * cache * (1.0 - cache), {}


LAYER_KINDS = {cls.kind: cls for cls in (Dense, Conv1d, BatchNorm, LeakyReLU, Flatten, Sigmoid)}


# ==================================================================
# Networks
# ==================================================================

@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple
    input_shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        self.layer_shapes()

    def layer_shapes(self) -> list[tuple]:
        """Input shape of every layer, followed by the network output shape."""
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(tuple(layer.output_shape(shapes[-1])))
        return shapes

    @property
    def output_shape(self) -> tuple:
        return self.layer_shapes()[-1]

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "layers": [{"kind": layer.kind, **dataclasses.asdict(layer)} for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NetworkSpec":
        layers = []
        for entry in payload["layers"]:
            entry = dict(entry)
            layers.append(LAYER_KINDS[entry.pop("kind")](**entry))
        return cls(layers=tuple(layers), input_shape=tuple(payload["input_shape"]))


@dataclass
class ForwardCache:
    train: bool
    layer_caches: list = field(default_factory=list)


@dataclass
class Gradients:
    params: Parameters
    input: np.ndarray


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> Parameters:
    shapes = spec.layer_shapes()
    return [layer.init_params(shapes[i], rng) for i, layer in enumerate(spec.layers)]


def copy_params(params: Parameters) -> Parameters:
    return copy.deepcopy(params)


def forward(spec: NetworkSpec, params: Parameters, batch_input: np.ndarray, mode: str = "train",
            track_running_stats: bool = True) -> tuple[np.ndarray, ForwardCache]:
    """
    Runs the layers in order. Train mode normalizes with batch statistics
    and, unless `track_running_stats` is False, updates the running ones.
    """
    if mode not in ("train", "eval"):
        raise InvalidArgumentError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(batch_input, dtype=np.float64)
    if x.ndim != len(spec.input_shape) + 1 or x.shape[1:] != spec.input_shape or x.shape[0] < 1:
        raise InvalidDimensionError(f"expected input (batch, {spec.input_shape}), got {x.shape}")
    if len(params) != len(spec.layers):
        raise InvalidDimensionError(f"{len(params)} parameter sets for {len(spec.layers)} layers")
    train = mode == "train"
    cache = ForwardCache(train=train)
    for layer, layer_params in zip(spec.layers, params):
        x, layer_cache = layer.forward(layer_params, x, train, track_running_stats)
        cache.layer_caches.append(layer_cache)
    return x, cache


def backward(spec: NetworkSpec, params: Parameters, cache: ForwardCache,
             output_gradient: np.ndarray) -> Gradients:
    """Gradients of the scalar loss whose output gradient is `output_gradient`."""
    if len(cache.layer_caches) != len(spec.layers):
        raise InvalidDimensionError("forward cache does not belong to this network")
    dy = np.asarray(output_gradient, dtype=np.float64)
    grads: Parameters = [{} for _ in spec.layers]
    for index in range(len(spec.layers) - 1, -1, -1):
        dy, grads[index] = spec.layers[index].backward(params[index], cache.layer_caches[index], dy)
    return Gradients(params=grads, input=dy)


def predict(spec: NetworkSpec, params: Parameters, batch_input: np.ndarray) -> np.ndarray:
    """Eval-mode forward pass without a cache."""
    output, _ = forward(spec, params, batch_input, mode="eval")
    return output


# ==================================================================
# Adam
# ==================================================================

@dataclass
class AdamState:
    m: Parameters
    v: Parameters
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def init_adam(params: Parameters, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> AdamState:
    zeros = [{key: np.zeros_like(value) for key, value in layer.items() if key in LEARNABLE} for layer in params]
    return AdamState(m=zeros, v=copy.deepcopy(zeros), beta1=beta1, beta2=beta2, epsilon=epsilon)


def adam_step(params: Parameters, grads: Gradients | Parameters, state: AdamState,
              lr: float) -> tuple[Parameters, AdamState]:
    """One bias-corrected Adam update; params and state are updated in place and returned."""
    layer_grads = grads.params if isinstance(grads, Gradients) else grads
    if len(layer_grads) != len(params) or len(state.m) != len(params):
        raise InvalidDimensionError("gradients, state and parameters have different layer counts")
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for layer_params, layer_grad, m, v in zip(params, layer_grads, state.m, state.v):
        for key, g in layer_grad.items():
            if g.shape != layer_params[key].shape:
                raise InvalidDimensionError(f"gradient for {key!r} has shape {g.shape}, "
                                            f"parameter has {layer_params[key].shape}")
            m[key] = state.beta1 * m[key] + (1.0 - state.beta1) * g
            v[key] = state.beta2 * v[key] + (1.0 - state.beta2) * g * g
            step = lr * (m[key] / correction1) / (np.sqrt(v[key] / correction2) + state.epsilon)
            layer_params[key] = layer_params[key] - step
    return params, state


# ==================================================================
# Inference folding and operation counting
# ==================================================================

def inference_spec(spec: NetworkSpec) -> NetworkSpec:
    """The batchnorm-free structure `fold_batchnorm` produces."""
    layers = []
    for index, layer in enumerate(spec.layers):
        if isinstance(layer, BatchNorm):
            if index == 0 or not isinstance(spec.layers[index - 1], (Dense, Conv1d)) or not layers \
                    or layers[-1] is not spec.layers[index - 1]:
                raise UnsupportedStructureError(f"batchnorm at layer {index} does not follow a dense/conv layer")
            continue
        layers.append(layer)
    return NetworkSpec(layers=tuple(layers), input_shape=spec.input_shape)


def fold_batchnorm(spec: NetworkSpec, params: Parameters) -> tuple[NetworkSpec, Parameters]:
    """Absorbs every eval-mode batchnorm into the preceding dense/conv weights."""
    folded_spec = inference_spec(spec)
    folded: Parameters = []
    for layer, layer_params in zip(spec.layers, params):
        if isinstance(layer, BatchNorm):
            factor = layer_params["scale"] / np.sqrt(layer_params["running_var"] + layer.eps)
            previous = folded[-1]
            previous["weight"] = previous["weight"] * factor
            previous["bias"] = (previous["bias"] - layer_params["running_mean"]) * factor + layer_params["shift"]
            continue
        folded.append({key: value.copy() for key, value in layer_params.items()})
    return folded_spec, folded


def count_operations(spec: NetworkSpec) -> tuple[int, int]:
    """(additions, multiplications) of one sample's forward pass; activations are free."""
    shapes = spec.layer_shapes()
    additions = multiplications = 0
    for index, layer in enumerate(spec.layers):
        if isinstance(layer, BatchNorm):
            raise UnsupportedStructureError("fold batchnorm layers before counting operations")
        adds, mults = layer.count_ops(shapes[index])
        additions += adds
        multiplications += mults
    return additions, multiplications


# ==================================================================
# Gradient checking
# ==================================================================

def numerical_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of the scalar function f() with respect to array x (perturbed in place)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        original = x[idx]
        x[idx] = original + h
        f_plus = f()
        x[idx] = original - h
        f_minus = f()
        x[idx] = original
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, atol: float = 1e-6) -> float:
    """
    ||a - n|| / (||a|| + ||n||). Zero when both norms are below `atol`: a
    bias feeding a batchnorm has a true gradient of exactly zero, and both
    sides are then rounding noise.
    """
    a_norm, n_norm = np.linalg.norm(analytic), np.linalg.norm(numeric)
    if max(a_norm, n_norm) < atol:
        return 0.0
    return float(np.linalg.norm(np.asarray(analytic) - np.asarray(numeric)) / (a_norm + n_norm))


def gradient_check(spec: NetworkSpec, params: Parameters, batch_input: np.ndarray,
                   rng: np.random.Generator, h: float = 1e-6) -> dict[str, float]:
    """
    Relative errors between backprop and central differences for every
    learnable array and for the input, under the loss sum(output * W) with
    a random projection W.
    """
    x = np.array(batch_input, dtype=np.float64)
    output, _ = forward(spec, params, x, track_running_stats=False)
    projection = rng.standard_normal(output.shape)

    def loss() -> float:
        out, _ = forward(spec, params, x, track_running_stats=False)
        return float(np.sum(out * projection))

    _, cache = forward(spec, params, x, track_running_stats=False)
    grads = backward(spec, params, cache, projection)

    errors = {"input": relative_error(grads.input, numerical_gradient(loss, x, h))}
    for index, layer_grads in enumerate(grads.params):
        for key, analytic in layer_grads.items():
            errors[f"{index}.{spec.layers[index].kind}.{key}"] = relative_error(
                analytic, numerical_gradient(loss, params[index][key], h))
    return errors


# ==================================================================
# Checkpoints
# ==================================================================

def params_to_arrays(params: Parameters, prefix: str) -> dict[str, np.ndarray]:
    """Flat `{prefix}.{layer}.{key}` mapping for container storage (buffers included)."""
    return {f"{prefix}.{index}.{key}": value
            for index, layer in enumerate(params) for key, value in layer.items()}


def params_from_arrays(spec: NetworkSpec, arrays: dict[str, np.ndarray], prefix: str) -> Parameters:
    """Inverse of params_to_arrays, checked against freshly initialized shapes."""
    template = init_params(spec, np.random.default_rng(0))
    params: Parameters = []
    for index, layer in enumerate(template):
        restored = {}
        for key, value in layer.items():
            name = f"{prefix}.{index}.{key}"
            if name not in arrays:
                raise ContainerFormatError(f"checkpoint is missing {name!r}")
            if arrays[name].shape != value.shape:
                raise ContainerFormatError(f"{name!r} has shape {arrays[name].shape}, expected {value.shape}")
            restored[key] = arrays[name]
        params.append(restored)
    return params


def save_network(path: str, spec: NetworkSpec, params: Parameters, metadata: dict | None = None):
    write_container(path, "network", {**(metadata or {}), "spec": spec.to_dict()},
                    params_to_arrays(params, "net"))


def load_network(path: str) -> tuple[NetworkSpec, Parameters, dict]:
    metadata, arrays = read_container(path, "network")
    try:
        spec = NetworkSpec.from_dict(metadata["spec"])
    except (KeyError, TypeError) as exc:
        raise ContainerFormatError(f"{path}: malformed network description ({exc})") from exc
    return spec, params_from_arrays(spec, arrays, "net"), metadata
