"""Activations, neurons, layers and feed-forward networks."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError


class ActivationKind(str, enum.Enum):
    IDENTITY = "identity"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"


def activate(kind, x):
    """Apply an activation to a scalar or an array (elementwise)."""
    kind = ActivationKind(kind)
    if kind is ActivationKind.IDENTITY:
        return x
    if kind is ActivationKind.SIGMOID:
        if np.ndim(x) == 0:
            return 1.0 / (1.0 + math.exp(-x))
        return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))
    if kind is ActivationKind.TANH:
        return np.tanh(x) if np.ndim(x) else math.tanh(x)
    return np.maximum(x, 0.0) if np.ndim(x) else max(x, 0.0)


def _as_vector(x, name="x"):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class Neuron:
    weights: np.ndarray
    bias: float = 0.0
    activation: ActivationKind = ActivationKind.IDENTITY

    def __post_init__(self):
        w = _as_vector(self.weights, "weights")
        if w.size < 1:
            raise DimensionError("a neuron needs at least one input")
        if not np.all(np.isfinite(w)):
            raise ValueError("neuron weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "activation", ActivationKind(self.activation))

    @property
    def arity(self):
        return self.weights.size


@dataclass(frozen=True)
class Layer:
    neurons: tuple[Neuron, ...]

    def __post_init__(self):
        neurons = tuple(self.neurons)
        if not neurons:
            raise DimensionError("a layer needs at least one neuron")
        k = neurons[0].arity
        if any(n.arity != k for n in neurons):
            raise DimensionError("all neurons of a layer must share the same input arity")
        object.__setattr__(self, "neurons", neurons)

    @classmethod
    def linear(cls, weights, biases=None, activation=ActivationKind.IDENTITY):
        """Build a layer from an n x k weight matrix (one row per neuron)."""
        W = np.atleast_2d(np.asarray(weights, dtype=float))
        b = np.zeros(W.shape[0]) if biases is None else np.asarray(biases, dtype=float)
        if b.shape != (W.shape[0],):
            raise DimensionError("need one bias per neuron")
        return cls(tuple(Neuron(row, bi, activation) for row, bi in zip(W, b)))

    @property
    def in_dim(self):
        return self.neurons[0].arity

    @property
    def out_dim(self):
        return len(self.neurons)


@dataclass(frozen=True)
class Network:
    layers: tuple[Layer, ...]
    input_dim: int

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionError("a network needs at least one layer")
        k = self.input_dim
        for i, layer in enumerate(layers, start=1):
            if layer.in_dim != k:
                raise DimensionError(
                    f"layer {i} expects {layer.in_dim} inputs but receives {k}"
                )
            k = layer.out_dim
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self):
        return len(self.layers)


@dataclass(frozen=True, eq=False)
class Dataset:
    """A learning set (or a batch of it): N input vectors with scalar targets."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise DimensionError(f"inputs must be an N x p array with N >= 1, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise DimensionError(f"{X.shape[0]} inputs but targets of shape {y.shape}")
        X = X.copy()
        y = y.copy()
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.inputs, other.inputs) and np.array_equal(self.targets, other.targets)

    __hash__ = None

    @property
    def size(self):
        return self.inputs.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def to_dict(self):
        return {"inputs": self.inputs.tolist(), "targets": self.targets.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["inputs"], d["targets"])


def neuron_forward(neuron: Neuron, x: Sequence[float]) -> float:
    x = _as_vector(x)
    if x.size != neuron.arity:
        raise DimensionError(f"neuron has {neuron.arity} inputs, got {x.size}")
    return float(activate(neuron.activation, float(neuron.weights @ x) + neuron.bias))


def layer_forward(layer: Layer, x: Sequence[float]) -> np.ndarray:
    x = _as_vector(x)
    if x.size != layer.in_dim:
        raise DimensionError(f"layer has {layer.in_dim} inputs, got {x.size}")
    return np.array([neuron_forward(n, x) for n in layer.neurons])


def network_forward(net: Network, x: Sequence[float], upto: int | None = None) -> np.ndarray:
    """Evaluate the composition of the first ``upto`` layers (all layers by default)."""
    x = _as_vector(x)
    if x.size != net.input_dim:
        raise DimensionError(f"network has input dimension {net.input_dim}, got {x.size}")
    for layer in net.layers[: net.depth if upto is None else upto]:
        x = layer_forward(layer, x)
    return x


def batch_output_matrix(net: Network, layer_index: int, batch: Dataset) -> np.ndarray:
    """Output Z_l of layer ``layer_index`` (1-based) for every batch element, as n_l x M."""
    if not 1 <= layer_index <= net.depth:
        raise IndexError(f"layer index {layer_index} outside 1..{net.depth}")
    if batch.dim != net.input_dim:
        raise DimensionError(f"batch inputs have dimension {batch.dim}, network expects {net.input_dim}")
    cols = [network_forward(net, x, upto=layer_index) for x in batch.inputs]
    return np.column_stack(cols)
