"""A small feed-forward network engine on bare numpy (float64):
dense and strided valid-padding conv layers, ReLU, exact
backpropagation, RMSProp, and .npz checkpoints.

The output layer is always dense and is read as a Q-matrix: its units
come in one group of ``n_actions`` per objective, reshaped to
(batch, n_actions, n_objectives). Gradients flow only through whatever
entries of that matrix the caller puts loss on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dense:
    units: int
    relu: bool = True

    def __post_init__(self) -> None:
        if self.units < 1:
            raise ValueError("units must be positive")


@dataclass(frozen=True)
class Conv2D:
    filters: int
    kernel: int
    stride: int = 1
    relu: bool = True

    def __post_init__(self) -> None:
        if self.filters < 1 or self.kernel < 1 or self.stride < 1:
            raise ValueError("conv parameters must be positive")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: hidden layers plus the implicit grouped head.

    ``input_shape`` is (features,) for flat inputs or (height, width,
    channels) for images.
    """

    input_shape: tuple[int, ...]
    hidden: tuple[Dense | Conv2D, ...]
    n_actions: int
    n_objectives: int

    def __post_init__(self) -> None:
        if self.n_actions < 1 or self.n_objectives < 1:
            raise ValueError("need at least one action and one objective")
        if len(self.input_shape) not in (1, 3):
            raise ValueError("input must be (features,) or (height, width, channels)")
        activation_shapes(self)  # raises if the layer chain is inconsistent


def _layers(spec: NetworkSpec) -> tuple[Dense | Conv2D, ...]:
    head = Dense(spec.n_actions * spec.n_objectives, relu=False)
    return spec.hidden + (head,)


def activation_shapes(spec: NetworkSpec) -> list[tuple[int, ...]]:
    """Shape of each layer's output (excluding batch), starting with
    the input itself. Raises if any layer cannot consume its input."""
    shapes = [tuple(spec.input_shape)]
    for layer in _layers(spec):
        shape = shapes[-1]
        if isinstance(layer, Conv2D):
            if len(shape) != 3:
                raise ValueError("conv layer needs a (height, width, channels) input")
            h, w, _ = shape
            if layer.kernel > h or layer.kernel > w:
                raise ValueError(f"kernel {layer.kernel} larger than input {h}x{w}")
            oh = (h - layer.kernel) // layer.stride + 1
            ow = (w - layer.kernel) // layer.stride + 1
            shapes.append((oh, ow, layer.filters))
        else:
            shapes.append((layer.units,))
    return shapes


@dataclass
class Parameters:
    """Weights and biases, one entry per layer (head included). Also
    used as the container for gradients, which share the structure."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Parameters":
        return Parameters([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def init_params(spec: NetworkSpec, seed: int) -> Parameters:
    """Glorot-uniform hidden weights in +/- sqrt(6 / (fan_in + fan_out)),
    zero biases. The output layer starts at exactly zero: every Q-value
    is then 0.0 until its own (action, objective) entry receives
    gradient, so actions an objective never distinguishes stay exactly
    tied and the greedy tie-break stays deterministic."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    shapes = activation_shapes(spec)
    layers = _layers(spec)
    for layer, in_shape in zip(layers, shapes):
        if isinstance(layer, Conv2D):
            c_in = in_shape[2]
            fan_in = layer.kernel * layer.kernel * c_in
            fan_out = layer.kernel * layer.kernel * layer.filters
            w_shape = (fan_in, layer.filters)
            b_shape = (layer.filters,)
        else:
            fan_in = int(np.prod(in_shape))
            fan_out = layer.units
            w_shape = (fan_in, layer.units)
            b_shape = (layer.units,)
        if layer is layers[-1]:
            weights.append(np.zeros(w_shape))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=w_shape))
        biases.append(np.zeros(b_shape))
    return Parameters(weights, biases)


def _im2col(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """(batch, h, w, c) -> (batch, oh, ow, kernel*kernel*c) patches."""
    b, h, w, c = x.shape
    oh = (h - kernel) // stride + 1
    ow = (w - kernel) // stride + 1
    patches = np.empty((b, oh, ow, kernel, kernel, c))
    for i in range(kernel):
        for j in range(kernel):
            patches[:, :, :, i, j, :] = x[
                :, i : i + stride * oh : stride, j : j + stride * ow : stride, :
            ]
    return patches.reshape(b, oh, ow, kernel * kernel * c)


def _col2im(dpatches: np.ndarray, x_shape, kernel: int, stride: int) -> np.ndarray:
    b, h, w, c = x_shape
    oh = (h - kernel) // stride + 1
    ow = (w - kernel) // stride + 1
    dp = dpatches.reshape(b, oh, ow, kernel, kernel, c)
    dx = np.zeros(x_shape)
    for i in range(kernel):
        for j in range(kernel):
            dx[:, i : i + stride * oh : stride, j : j + stride * ow : stride, :] += dp[
                :, :, :, i, j, :
            ]
    return dx


@dataclass
class NetCache:
    """Intermediates from one forward pass, consumed by backward."""

    params: Parameters
    batch: int
    layer_caches: list[tuple]


def forward(spec: NetworkSpec, params: Parameters, x: np.ndarray) -> tuple[np.ndarray, NetCache]:
    """Batched forward pass: x of shape (batch, *input_shape) to a
    Q-matrix of shape (batch, n_actions, n_objectives)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != len(spec.input_shape) + 1 or x.shape[1:] != tuple(spec.input_shape):
        raise ValueError(
            f"expected input of shape (batch, {', '.join(map(str, spec.input_shape))}), "
            f"got {x.shape}"
        )
    layers = _layers(spec)
    if len(params.weights) != len(layers) or len(params.biases) != len(layers):
        raise ValueError("parameter count does not match the architecture")
    a = x
    caches: list[tuple] = []
    for layer, w, b in zip(layers, params.weights, params.biases):
        if isinstance(layer, Conv2D):
            patches = _im2col(a, layer.kernel, layer.stride)
            z = patches @ w + b
            caches.append(("conv", layer, a.shape, patches, z))
        else:
            in_shape = a.shape
            flat = a.reshape(a.shape[0], -1)
            z = flat @ w + b
            caches.append(("dense", layer, in_shape, flat, z))
        a = np.maximum(z, 0.0) if layer.relu else z
    q = a.reshape(x.shape[0], spec.n_objectives, spec.n_actions).transpose(0, 2, 1)
    return q, NetCache(params, x.shape[0], caches)


def backward(
    spec: NetworkSpec, params: Parameters, cache: NetCache, dq: np.ndarray
) -> Parameters:
    """Gradient of a scalar loss with respect to every parameter, given
    dq = dLoss/dQ of shape (batch, n_actions, n_objectives). The cache
    must come from a forward pass with these exact parameters."""
    if cache.params is not params:
        raise RuntimeError("cache was produced by a different forward pass")
    dq = np.asarray(dq, dtype=float)
    if dq.shape != (cache.batch, spec.n_actions, spec.n_objectives):
        raise ValueError(f"dq has shape {dq.shape}, expected "
                         f"({cache.batch}, {spec.n_actions}, {spec.n_objectives})")
    layers = _layers(spec)
    if len(cache.layer_caches) != len(layers):
        raise RuntimeError("cache does not match the architecture")
    d_out = dq.transpose(0, 2, 1).reshape(cache.batch, -1)
    d_weights: list[np.ndarray] = [None] * len(layers)  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * len(layers)  # type: ignore[list-item]
    for idx in range(len(layers) - 1, -1, -1):
        entry = cache.layer_caches[idx]
        kind, layer = entry[0], entry[1]
        w = params.weights[idx]
        if kind == "dense":
            _, _, in_shape, flat, z = entry
            dz = d_out * (z > 0.0) if layer.relu else d_out
            d_weights[idx] = flat.T @ dz
            d_biases[idx] = dz.sum(axis=0)
            d_out = (dz @ w.T).reshape(in_shape)
        else:
            _, _, in_shape, patches, z = entry
            dz = d_out * (z > 0.0) if layer.relu else d_out
            d_weights[idx] = np.tensordot(patches, dz, axes=([0, 1, 2], [0, 1, 2]))
            d_biases[idx] = dz.sum(axis=(0, 1, 2))
            d_out = _col2im(dz @ w.T, in_shape, layer.kernel, layer.stride)
    return Parameters(d_weights, d_biases)


@dataclass
class RMSPropState:
    """Running squared-gradient averages plus the step-size constants."""

    learning_rate: float
    decay: float
    epsilon: float
    sq_weights: list[np.ndarray]
    sq_biases: list[np.ndarray]


def init_rmsprop(
    params: Parameters,
    learning_rate: float = 1e-4,
    decay: float = 0.99,
    epsilon: float = 1e-6,
) -> RMSPropState:
    if learning_rate <= 0 or not 0 <= decay < 1 or epsilon <= 0:
        raise ValueError("bad optimizer constants")
    return RMSPropState(
        learning_rate,
        decay,
        epsilon,
        [np.zeros_like(w) for w in params.weights],
        [np.zeros_like(b) for b in params.biases],
    )


def rmsprop_update(params: Parameters, grads: Parameters, state: RMSPropState) -> Parameters:
    """In-place RMSProp step:
    cache <- decay*cache + (1-decay)*g^2; p <- p - lr*g/(sqrt(cache)+eps)."""
    for p, g, sq in zip(
        params.weights + params.biases,
        grads.weights + grads.biases,
        state.sq_weights + state.sq_biases,
    ):
        if p.shape != g.shape:
            raise ValueError("gradient shape does not match parameters")
        sq *= state.decay
        sq += (1.0 - state.decay) * g * g
        p -= state.learning_rate * g / (np.sqrt(sq) + state.epsilon)
    return params


def sync_target(online: Parameters, target: Parameters) -> None:
    """Copy online weights into the target container, in place."""
    if len(online.weights) != len(target.weights):
        raise ValueError("parameter structures differ")
    for src, dst in zip(online.weights + online.biases, target.weights + target.biases):
        if src.shape != dst.shape:
            raise ValueError("parameter structures differ")
        np.copyto(dst, src)


_CHECKPOINT_VERSION = 1


def _spec_to_dict(spec: NetworkSpec) -> dict:
    hidden = []
    for layer in spec.hidden:
        if isinstance(layer, Conv2D):
            hidden.append(
                {
                    "type": "conv2d",
                    "filters": layer.filters,
                    "kernel": layer.kernel,
                    "stride": layer.stride,
                    "relu": layer.relu,
                }
            )
        else:
            hidden.append({"type": "dense", "units": layer.units, "relu": layer.relu})
    return {
        "input_shape": list(spec.input_shape),
        "hidden": hidden,
        "n_actions": spec.n_actions,
        "n_objectives": spec.n_objectives,
    }


def _spec_from_dict(data: dict) -> NetworkSpec:
    hidden: list[Dense | Conv2D] = []
    for item in data["hidden"]:
        if item["type"] == "conv2d":
            hidden.append(
                Conv2D(item["filters"], item["kernel"], item["stride"], item["relu"])
            )
        elif item["type"] == "dense":
            hidden.append(Dense(item["units"], item["relu"]))
        else:
            raise ValueError(f"unknown layer type {item['type']!r}")
    return NetworkSpec(
        tuple(data["input_shape"]),
        tuple(hidden),
        data["n_actions"],
        data["n_objectives"],
    )


def save_params(path, spec: NetworkSpec, params: Parameters) -> None:
    arrays = {
        "version": np.array(_CHECKPOINT_VERSION),
        "spec": np.array(json.dumps(_spec_to_dict(spec))),
    }
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(path, **arrays)


def load_params(path) -> tuple[NetworkSpec, Parameters]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        spec = _spec_from_dict(json.loads(str(data["spec"])))
        n_layers = len(_layers(spec))
        try:
            weights = [data[f"w{i}"] for i in range(n_layers)]
            biases = [data[f"b{i}"] for i in range(n_layers)]
        except KeyError as exc:
            raise ValueError("checkpoint is missing parameter arrays") from exc
    params = Parameters(weights, biases)
    expected = init_params(spec, seed=0)
    for have, want in zip(params.weights + params.biases, expected.weights + expected.biases):
        if have.shape != want.shape:
            raise ValueError("checkpoint arrays do not fit the stored architecture")
    return spec, params
