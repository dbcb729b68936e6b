"""Small fully connected ReLU network used to warp kernel inputs.

The network is never trained by backpropagation. Its weights and biases are
ordinary GP hyperparameters, packed into a flat vector so the derivative-free
optimizers can search over them.

Flat layout is layer-major; within a layer the weight matrix (shape
``fan_in x fan_out``) comes first in row-major order, followed by the bias.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def parameter_count(layer_widths: Sequence[int]) -> int:
    """Number of weights plus biases for the given layer widths."""
    widths = list(layer_widths)
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


@dataclass(frozen=True)
class WarpNet:
    layer_widths: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        widths = self.layer_widths
        if len(widths) < 2:
            raise ValueError("a network needs at least an input and an output width")
        if len(self.weights) != len(widths) - 1 or len(self.biases) != len(widths) - 1:
            raise ValueError("number of layers does not match layer_widths")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (widths[i], widths[i + 1]) or b.shape != (widths[i + 1],):
                raise ValueError(
                    f"layer {i}: got weight {w.shape} and bias {b.shape}, "
                    f"expected ({widths[i]}, {widths[i + 1]}) and ({widths[i + 1]},)"
                )

    @property
    def n_params(self) -> int:
        return parameter_count(self.layer_widths)

    @classmethod
    def zeros(cls, layer_widths: Sequence[int]) -> "WarpNet":
        widths = tuple(int(w) for w in layer_widths)
        return cls.unpack(widths, np.zeros(parameter_count(widths)))

    @classmethod
    def identity(cls, layer_widths: Sequence[int]) -> "WarpNet":
        """Network that reproduces its input on the positive orthant.

        Requires every hidden width to be at least the input width and the
        output width to equal the input width.
        """
        widths = tuple(int(w) for w in layer_widths)
        n = widths[0]
        if widths[-1] != n or min(widths) < n:
            raise ValueError("identity warp needs hidden widths >= input width == output width")
        weights = tuple(np.eye(a, b) for a, b in zip(widths[:-1], widths[1:]))
        biases = tuple(np.zeros(b) for b in widths[1:])
        return cls(widths, weights, biases)

    @classmethod
    def unpack(cls, layer_widths: Sequence[int], flat) -> "WarpNet":
        widths = tuple(int(w) for w in layer_widths)
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (parameter_count(widths),):
            raise ValueError(
                f"expected {parameter_count(widths)} network parameters, got {flat.size}"
            )
        weights, biases = [], []
        pos = 0
        for a, b in zip(widths[:-1], widths[1:]):
            weights.append(flat[pos:pos + a * b].reshape(a, b).copy())
            pos += a * b
            biases.append(flat[pos:pos + b].copy())
            pos += b
        return cls(widths, tuple(weights), tuple(biases))

    def pack(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def forward(self, x) -> np.ndarray:
        """Push points through the network.

        Accepts a single point of shape ``(n,)`` or a batch ``(Q, n)``;
        hidden layers use ReLU and the output layer is linear.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = np.atleast_2d(x)
        if h.shape[1] != self.layer_widths[0]:
            raise ValueError(
                f"input dimension {h.shape[1]} does not match network input {self.layer_widths[0]}"
            )
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h[0] if single else h
