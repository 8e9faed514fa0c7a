"""Softmax regression and a one-hidden-layer tanh network.

Gradients are derived by hand and verified against central finite
differences in the test suite.  Both models expose the same surface:
ordered named parameters, logits, and loss_and_grads, which is all the
training loop needs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ToyModelSpec:
    kind: str  # "linear" | "mlp"
    hidden_units: int = 32

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.kind == "mlp" and self.hidden_units < 1:
            raise ModelError("mlp needs at least one hidden unit")

    @property
    def model_name(self) -> str:
        return "toy_linear" if self.kind == "linear" else "toy_mlp"

    def num_params(self, num_features: int, num_classes: int) -> int:
        if self.kind == "linear":
            return num_features * num_classes + num_classes
        h = self.hidden_units
        return num_features * h + h + h * num_classes + num_classes


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    p = probs[np.arange(len(labels)), labels]
    # a gold probability underflowing to 0 is a diverged run; surface the
    # resulting inf instead of clipping it away
    with np.errstate(divide="ignore"):
        return float(-np.mean(np.log(p)))


class LinearModel:
    """Softmax regression: logits = X W + b."""

    def __init__(self, num_features: int, num_classes: int, rng: np.random.Generator):
        self.W = rng.normal(0.0, 1.0 / np.sqrt(num_features), (num_features, num_classes))
        self.b = np.zeros(num_classes)

    def param_items(self):
        return [("W", self.W), ("b", self.b)]

    def logits(self, X: np.ndarray) -> np.ndarray:
        return X @ self.W + self.b

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        n = len(y)
        probs = softmax(self.logits(X))
        loss = cross_entropy(probs, y)
        G = probs.copy()
        G[np.arange(n), y] -= 1.0
        G /= n
        return loss, {"W": X.T @ G, "b": G.sum(axis=0)}


class MlpModel:
    """One hidden tanh layer: logits = tanh(X W1 + b1) W2 + b2."""

    def __init__(
        self,
        num_features: int,
        num_classes: int,
        rng: np.random.Generator,
        hidden_units: int = 32,
    ):
        self.W1 = rng.normal(0.0, 1.0 / np.sqrt(num_features), (num_features, hidden_units))
        self.b1 = np.zeros(hidden_units)
        self.W2 = rng.normal(0.0, 1.0 / np.sqrt(hidden_units), (hidden_units, num_classes))
        self.b2 = np.zeros(num_classes)

    def param_items(self):
        return [("W1", self.W1), ("b1", self.b1), ("W2", self.W2), ("b2", self.b2)]

    def logits(self, X: np.ndarray) -> np.ndarray:
        return np.tanh(X @ self.W1 + self.b1) @ self.W2 + self.b2

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        n = len(y)
        h = np.tanh(X @ self.W1 + self.b1)
        probs = softmax(h @ self.W2 + self.b2)
        loss = cross_entropy(probs, y)
        G = probs.copy()
        G[np.arange(n), y] -= 1.0
        G /= n
        dH = (G @ self.W2.T) * (1.0 - h * h)
        return loss, {
            "W1": X.T @ dH,
            "b1": dH.sum(axis=0),
            "W2": h.T @ G,
            "b2": G.sum(axis=0),
        }


def create_model(spec: ToyModelSpec, num_features: int, num_classes: int, rng):
    if spec.kind == "linear":
        return LinearModel(num_features, num_classes, rng)
    return MlpModel(num_features, num_classes, rng, spec.hidden_units)


def loss_at(model, X: np.ndarray, y: np.ndarray) -> float:
    return cross_entropy(softmax(model.logits(X)), y)


def params_digest(model) -> str:
    """Hex digest of all parameters in declaration order; bit-exact."""
    h = hashlib.sha256()
    for name, arr in model.param_items():
        h.update(name.encode())
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()
