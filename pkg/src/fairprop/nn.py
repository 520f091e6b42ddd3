"""Feature-transformation MLP, cross-entropy loss, and Adam optimizer."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

Array = np.ndarray


@dataclass
class MlpConfig:
    in_dim: int
    hidden: list = field(default_factory=lambda: [64])
    out_dim: int = 2

    def layer_dims(self):
        dims = [self.in_dim] + list(self.hidden) + [self.out_dim]
        return list(zip(dims[:-1], dims[1:]))


class Mlp:
    """Fully connected network: ReLU between layers, none after the last."""

    def __init__(self, config: MlpConfig, weights, biases, seed=None):
        for (w, b), (fan_in, fan_out) in zip(zip(weights, biases), config.layer_dims()):
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ValueError("layer shapes inconsistent with config")
        self.config = config
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.seed = seed

    def parameters(self):
        params = []
        for w, b in zip(self.weights, self.biases):
            params += [w, b]
        return params

    def set_parameters(self, params):
        it = iter(params)
        for i in range(len(self.weights)):
            self.weights[i] = np.asarray(next(it), dtype=np.float64)
            self.biases[i] = np.asarray(next(it), dtype=np.float64)

    def copy(self) -> "Mlp":
        return Mlp(
            self.config,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            seed=self.seed,
        )


def init_weights(config: MlpConfig, seed: int) -> Mlp:
    """Glorot-uniform weights and zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in config.layer_dims():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(config, weights, biases, seed=seed)


def mlp_forward(mlp: Mlp, tape: ad.Tape, x: ad.Tensor):
    """Run the MLP on the tape.

    Returns (output tensor, list of parameter leaf tensors in the order of
    ``mlp.parameters()``).
    """
    if x.shape[1] != mlp.config.in_dim:
        raise ValueError(
            f"expected input dim {mlp.config.in_dim}, got {x.shape[1]}"
        )
    param_tensors = []
    h = x
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        wt = tape.leaf(w, requires_grad=True)
        bt = tape.leaf(b.reshape(1, -1), requires_grad=True)
        param_tensors += [wt, bt]
        h = ad.add(ad.matmul(h, wt), bt)
        if i != last:
            h = ad.relu(h)
    return h, param_tensors


def cross_entropy(logits: ad.Tensor, labels, mask) -> ad.Tensor:
    """Masked mean cross-entropy on the active tape."""
    return ad.cross_entropy_with_logits(logits, labels, mask)


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update; weight decay coupled into the gradient.

    Mutates ``state`` and returns the updated parameter list.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads length mismatch")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError("parameter/gradient shape mismatch")
    state.t += 1
    t = state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        g = g + state.weight_decay * p
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / (1.0 - state.beta1**t)
        v_hat = state.v[i] / (1.0 - state.beta2**t)
        out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


def save_checkpoint(path, mlp: Mlp):
    """Write the model as a single JSON document."""
    doc = {
        "config": {
            "in_dim": mlp.config.in_dim,
            "hidden": list(mlp.config.hidden),
            "out_dim": mlp.config.out_dim,
        },
        "layers": [
            {"w": w.tolist(), "b": b.tolist()}
            for w, b in zip(mlp.weights, mlp.biases)
        ],
        "seed": mlp.seed,
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_checkpoint(path) -> Mlp:
    with open(path) as f:
        doc = json.load(f)
    config = MlpConfig(
        in_dim=doc["config"]["in_dim"],
        hidden=list(doc["config"]["hidden"]),
        out_dim=doc["config"]["out_dim"],
    )
    weights = [np.asarray(layer["w"], dtype=np.float64) for layer in doc["layers"]]
    biases = [np.asarray(layer["b"], dtype=np.float64) for layer in doc["layers"]]
    return Mlp(config, weights, biases, seed=doc.get("seed"))
