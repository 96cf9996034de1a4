"""Dense-layer math, activations, temperature softmax, cross-entropy, and SGD.

Everything here computes in float64. Functions accept either a single vector
(1-D) or a batch (2-D, batch-first); gradients are written out by hand so the
whole stack stays checkable against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Operand shape does not match the layer or operation contract."""


def as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


@dataclass
class DenseLayerParams:
    """One fully connected layer: weights (out x in) and bias (out)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = as_f64(self.weights)
        self.bias = as_f64(self.bias)
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.bias.ndim != 1:
            raise ShapeError(f"bias must be 1-D, got shape {self.bias.shape}")
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != weight rows {self.weights.shape[0]}"
            )
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ValueError("layer parameters must be finite")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "DenseLayerParams":
        return DenseLayerParams(self.weights.copy(), self.bias.copy())


@dataclass
class SgdConfig:
    """Plain SGD with coupled L2 weight decay (decay added to the gradient)."""

    learning_rate: float
    weight_decay: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")


def init_dense(rng: np.random.Generator, out_dim: int, in_dim: int) -> DenseLayerParams:
    """Glorot-uniform weights, zero bias."""
    limit = math.sqrt(6.0 / (in_dim + out_dim))
    weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
    return DenseLayerParams(weights, np.zeros(out_dim))


def dense_forward(layer: DenseLayerParams, x) -> np.ndarray:
    """y = W x + b.  x may be (in,) or (batch, in)."""
    x = as_f64(x)
    if x.shape[-1] != layer.in_dim:
        raise ShapeError(f"input length {x.shape[-1]} != layer input dim {layer.in_dim}")
    return x @ layer.weights.T + layer.bias


def dense_backward(layer: DenseLayerParams, x, grad_out):
    """Gradients of a dense layer given the upstream gradient of its output.

    Returns (d_weights, d_bias, d_input); x and grad_out may be batched.
    """
    x = as_f64(x)
    grad_out = as_f64(grad_out)
    if x.ndim == 1:
        d_w = np.outer(grad_out, x)
        d_b = grad_out.copy()
    else:
        d_w = grad_out.T @ x
        d_b = grad_out.sum(axis=0)
    d_x = grad_out @ layer.weights
    return d_w, d_b, d_x


def relu(x) -> np.ndarray:
    return np.maximum(0.0, as_f64(x))


def relu_backward(x, grad_out) -> np.ndarray:
    # subgradient 0 at exactly 0
    return as_f64(grad_out) * (as_f64(x) > 0.0)


def sigmoid(x) -> np.ndarray:
    # split by sign to avoid overflow in exp
    x = as_f64(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_temperature(logits, temperature: float) -> np.ndarray:
    """softmax(logits / temperature), computed with max-subtraction.

    Rows of the result are probability vectors summing to 1 within 1e-12.
    """
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    z = as_f64(logits)
    if not np.isfinite(z).all():
        raise ValueError("logits must be finite")
    z = z / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss(probabilities, target_class: int) -> float:
    """-log p[target] for one probability vector."""
    p = as_f64(probabilities)
    if p.ndim != 1:
        raise ShapeError(f"expected a probability vector, got shape {p.shape}")
    if not 0 <= target_class < p.shape[0]:
        raise IndexError(f"target class {target_class} out of range [0, {p.shape[0]})")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return float(-np.log(p[target_class]))


def batch_cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean -log p[target] over a (batch, classes) probability matrix.

    An underflowed target probability yields inf, the caller's divergence signal.
    """
    p = probs[np.arange(probs.shape[0]), targets]
    with np.errstate(divide="ignore"):
        return float(-np.log(p).mean())


def softmax_xent_grad(probs: np.ndarray, targets: np.ndarray, temperature: float) -> np.ndarray:
    """d(mean cross-entropy)/d(logits) for temperature softmax: (p - onehot) / (T * batch)."""
    grad = probs.copy()
    if grad.ndim == 1:
        grad[targets] -= 1.0
        return grad / temperature
    grad[np.arange(grad.shape[0]), targets] -= 1.0
    return grad / (temperature * grad.shape[0])


def decays(name: str) -> bool:
    """Weight decay applies to weight matrices only; bias vectors are excluded."""
    return name.rsplit(".", 1)[-1].startswith("W")


def sgd_step(
    params: dict[str, np.ndarray],
    gradients: dict[str, np.ndarray],
    config: SgdConfig,
) -> dict[str, np.ndarray]:
    """w <- w - lr * (g + weight_decay * w); biases skip the decay term."""
    updated = {}
    for name, w in params.items():
        g = gradients[name]
        if g.shape != w.shape:
            raise ShapeError(f"gradient shape {g.shape} != param shape {w.shape} for {name!r}")
        if decays(name) and config.weight_decay != 0.0:
            g = g + config.weight_decay * w
        updated[name] = w - config.learning_rate * g
    return updated
