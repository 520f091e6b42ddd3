"""Propagation with an explicit primal-dual debiasing step.

Each layer runs one predictor-corrector iteration: aggregate with a skip
connection, take a gradient step on the node features against the group
probability gap, update the dual perturbation direction, and project it
back into the l-infinity ball of radius lambda_fair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .graph import IncidentVector, SparseGraph
from .nn import Mlp, mlp_forward

Array = np.ndarray


@dataclass(frozen=True)
class DebiasParams:
    """Smoothness/fairness weights, layer count, and derived step sizes."""

    lambda_smooth: float = 1.0
    lambda_fair: float = 10.0
    num_layers: int = 2

    def __post_init__(self):
        if self.lambda_smooth < 0 or self.lambda_fair < 0:
            raise ValueError("weights must be nonnegative")
        if self.num_layers < 0:
            raise ValueError("layer count must be nonnegative")

    @property
    def gamma(self) -> float:
        """Primal step size 1 / (1 + lambda_smooth)."""
        return 1.0 / (1.0 + self.lambda_smooth)

    @property
    def beta(self) -> float:
        """Dual step size 1 / (2 * gamma) = (1 + lambda_smooth) / 2."""
        return (1.0 + self.lambda_smooth) / 2.0


def row_softmax(F: Array) -> Array:
    """Plain numpy softmax over the column dimension of each row."""
    z = F - F.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def fairness_grad(F: Array, u: Array, delta: IncidentVector, alloc_log=None) -> Array:
    """Gradient of <delta . softmax(F), u> with respect to F.

    Closed form: T - rowsum(T) * softmax(F) with T = (delta^T u) * softmax(F).
    Every intermediate is n x d or n x 1; ``alloc_log`` (a list, if given)
    collects the shape of each allocated buffer.
    """
    F = np.asarray(F, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64).reshape(1, -1)
    if F.shape[1] != u.shape[1]:
        raise ValueError(f"shape mismatch: F {F.shape}, u {u.shape}")
    if F.shape[0] != delta.values.shape[0]:
        raise ValueError("row count mismatch with incident vector")

    def log(buf):
        if alloc_log is not None:
            alloc_log.append(buf.shape)
        return buf

    sf = log(row_softmax(F))
    us = log(delta.values[:, None] * u)
    t = log(us * sf)
    row = log(t.sum(axis=1, keepdims=True))
    return log(t - row * sf)


def prox_dual(u_bar: Array, lambda_fair: float) -> Array:
    """Entrywise projection into the l-infinity ball of radius lambda_fair."""
    if lambda_fair < 0:
        raise ValueError("radius must be nonnegative")
    u_bar = np.asarray(u_bar, dtype=np.float64)
    return np.sign(u_bar) * np.minimum(np.abs(u_bar), lambda_fair)


def fairness_objective(F: Array, delta: IncidentVector, lambda_fair: float):
    """lambda_fair * ||delta . softmax(F)||_1 and the raw gap vector p."""
    F = np.asarray(F, dtype=np.float64)
    p = delta.values @ row_softmax(F)
    return lambda_fair * float(np.abs(p).sum()), p


def ml1_step(
    F: Array,
    X_trans: Array,
    g: SparseGraph,
    delta: IncidentVector,
    hp: DebiasParams,
) -> Array:
    """Direct subgradient step on the combined objective (no dual variable).

    Uses lambda_fair * sign(p) in place of the dual variable; sign is treated
    as constant.
    """
    F = np.asarray(F, dtype=np.float64)
    X_trans = np.asarray(X_trans, dtype=np.float64)
    if F.shape != X_trans.shape:
        raise ValueError("shape mismatch")
    gamma = hp.gamma
    agg = gamma * X_trans + (1.0 - gamma) * (g.adjacency @ F)
    _, p = fairness_objective(F, delta, hp.lambda_fair)
    u_eff = hp.lambda_fair * np.sign(p).reshape(1, -1)
    return agg - gamma * fairness_grad(F, u_eff, delta)


# ---------------------------------------------------------------------------
# Tape-recorded versions used during training
# ---------------------------------------------------------------------------


def _fairness_grad_ops(
    tape: ad.Tape, F: ad.Tensor, u: ad.Tensor, delta_col: ad.Tensor
) -> ad.Tensor:
    """fairness_grad composed from tape primitives (differentiable in F and u)."""
    sf = ad.row_softmax(F)
    us = ad.matmul(delta_col, u)  # outer product, delta constant
    t = ad.elementwise_mul(us, sf)
    row = ad.row_sum_broadcast(t)
    return ad.add(t, ad.scale(ad.elementwise_mul(row, sf), -1.0))


class DebiasLeaves:
    """Constant incident-vector leaves shared by the layer steps of one tape."""

    def __init__(self, tape: ad.Tape, delta: IncidentVector):
        self.col = tape.leaf(delta.values.reshape(-1, 1))
        self.row = tape.leaf(delta.values.reshape(1, -1))


def layer_step(
    tape: ad.Tape,
    F: ad.Tensor,
    u: ad.Tensor,
    X_trans: ad.Tensor,
    g: SparseGraph,
    leaves: DebiasLeaves,
    hp: DebiasParams,
):
    """One aggregation + debiasing layer on the tape; returns (F_next, u_next)."""
    gamma, beta, lam = hp.gamma, hp.beta, hp.lambda_fair
    agg = ad.add(ad.scale(X_trans, gamma), ad.scale(ad.spmm_const(g, F), 1.0 - gamma))
    grad_k = _fairness_grad_ops(tape, F, u, leaves.col)
    f_bar = ad.add(agg, ad.scale(grad_k, -gamma))
    p_bar = ad.matmul(leaves.row, ad.row_softmax(f_bar))
    u_bar = ad.add(u, ad.scale(p_bar, beta))
    u_next = ad.clamp(u_bar, -lam, lam)
    grad_next = _fairness_grad_ops(tape, F, u_next, leaves.col)
    f_next = ad.add(agg, ad.scale(grad_next, -gamma))
    if np.isnan(f_next.data).any():
        raise FloatingPointError("NaN produced in debiasing layer")
    return f_next, u_next


def forward(
    mlp: Mlp,
    tape: ad.Tape,
    x: ad.Tensor,
    g: SparseGraph,
    delta: IncidentVector,
    hp: DebiasParams,
):
    """Transform features, then apply ``num_layers`` debiasing layers.

    Returns (logits tensor, MLP parameter tensors). The dual variable starts
    at zero and is threaded through the layers within this forward pass only.
    """
    x_trans, params = mlp_forward(mlp, tape, x)
    F = x_trans
    u = tape.leaf(np.zeros((1, mlp.config.out_dim)))
    leaves = DebiasLeaves(tape, delta)
    for _ in range(hp.num_layers):
        F, u = layer_step(tape, F, u, x_trans, g, leaves, hp)
    return F, params


def ml1_layer_step(
    tape: ad.Tape,
    F: ad.Tensor,
    X_trans: ad.Tensor,
    g: SparseGraph,
    leaves: DebiasLeaves,
    delta: IncidentVector,
    hp: DebiasParams,
) -> ad.Tensor:
    """Tape version of the direct-subgradient baseline step."""
    gamma = hp.gamma
    agg = ad.add(ad.scale(X_trans, gamma), ad.scale(ad.spmm_const(g, F), 1.0 - gamma))
    _, p = fairness_objective(F.data, delta, hp.lambda_fair)
    u_eff = tape.leaf(hp.lambda_fair * np.sign(p).reshape(1, -1))
    grad = _fairness_grad_ops(tape, F, u_eff, leaves.col)
    return ad.add(agg, ad.scale(grad, -gamma))


def ml1_forward(
    mlp: Mlp,
    tape: ad.Tape,
    x: ad.Tensor,
    g: SparseGraph,
    delta: IncidentVector,
    hp: DebiasParams,
):
    """MLP transform followed by ``num_layers`` direct-subgradient steps."""
    x_trans, params = mlp_forward(mlp, tape, x)
    F = x_trans
    leaves = DebiasLeaves(tape, delta)
    for _ in range(hp.num_layers):
        F = ml1_layer_step(tape, F, x_trans, g, leaves, delta, hp)
    return F, params
