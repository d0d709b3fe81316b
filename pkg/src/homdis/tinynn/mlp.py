"""Feed-forward classifier: tanh hidden layers, softmax output, manual backprop."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DivergenceError, ShapeError
from .adam import AdamState
from .core import glorot_uniform, log_softmax, softmax


@dataclass
class MlpModel:
    """Weights and biases for input -> hidden* -> class_count.

    weights[i] has shape (out_i, in_i); the last layer feeds the softmax.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[1])

    @property
    def class_count(self) -> int:
        return int(self.weights[-1].shape[0])

    @property
    def hidden_sizes(self) -> list[int]:
        return [int(w.shape[0]) for w in self.weights[:-1]]

    def parameters(self) -> dict[str, np.ndarray]:
        params: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"w{i}"] = w
            params[f"b{i}"] = b
        return params


def create_mlp(
    input_dim: int,
    class_count: int,
    seed: int,
    hidden_size: int = 100,
    hidden_layer_count: int = 2,
) -> MlpModel:
    """Seeded Glorot-uniform init for the default 100x2 hidden stack."""
    if input_dim < 1 or class_count < 1:
        raise ShapeError(
            f"invalid MLP shape: input_dim={input_dim} class_count={class_count}"
        )
    rng = np.random.default_rng(seed)
    dims = [input_dim] + [hidden_size] * hidden_layer_count + [class_count]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(glorot_uniform(rng, (fan_out, fan_in), fan_in, fan_out))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return MlpModel(weights=weights, biases=biases)


def _forward_cache(model: MlpModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Returns (activations per layer input, logits)."""
    a = x
    acts = [a]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        a = np.tanh(w @ a + b)
        acts.append(a)
    logits = model.weights[-1] @ acts[-1] + model.biases[-1]
    return acts, logits


def _check_input(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.input_dim:
        raise ShapeError(
            f"input of shape {x.shape} does not match model input_dim "
            f"{model.input_dim}"
        )
    return x


def mlp_forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Class probability vector for one input; sums to 1 within 1e-9."""
    x = _check_input(model, x)
    _, logits = _forward_cache(model, x)
    return softmax(logits)


def mlp_logits(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = _check_input(model, x)
    _, logits = _forward_cache(model, x)
    return logits


def mlp_loss_grads(
    model: MlpModel, x: np.ndarray, label: int
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Softmax cross-entropy loss, parameter gradients, and input gradient.

    The input gradient supports composite models (an encoder feeding the MLP).
    """
    x = _check_input(model, x)
    if not 0 <= label < model.class_count:
        raise ShapeError(
            f"label {label} out of range for {model.class_count} classes"
        )
    acts, logits = _forward_cache(model, x)
    logp = log_softmax(logits)
    loss = -logp[label]
    d_logits = np.exp(logp)
    d_logits[label] -= 1.0

    grads: dict[str, np.ndarray] = {}
    last = len(model.weights) - 1
    grads[f"w{last}"] = np.outer(d_logits, acts[-1])
    grads[f"b{last}"] = d_logits
    d_a = model.weights[last].T @ d_logits
    for i in range(last - 1, -1, -1):
        d_z = d_a * (1.0 - acts[i + 1] ** 2)  # tanh'
        grads[f"w{i}"] = np.outer(d_z, acts[i])
        grads[f"b{i}"] = d_z
        d_a = model.weights[i].T @ d_z
    return float(loss), grads, d_a


def train_mlp(
    model: MlpModel,
    examples: Sequence[tuple[np.ndarray, int]],
    epochs: int,
    seed: int,
    learning_rate: float = 0.001,
) -> MlpModel:
    """Per-example Adam updates with a fixed reshuffle each epoch.

    Mutates and returns the given model. Deterministic in (model init,
    seed, data); epochs=0 leaves the parameters untouched.
    """
    for x, y in examples:
        if not 0 <= y < model.class_count:
            raise ShapeError(
                f"label {y} out of range for {model.class_count} classes"
            )
    params = model.parameters()
    adam = AdamState.for_params(params, learning_rate=learning_rate)
    rng = np.random.default_rng(seed)
    step = 0
    for epoch in range(epochs):
        order = rng.permutation(len(examples))
        for idx in order:
            x, y = examples[idx]
            loss, grads, _ = mlp_loss_grads(model, np.asarray(x, dtype=np.float64), y)
            step += 1
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, step {step}"
                )
            adam.step(params, grads)
    return model
