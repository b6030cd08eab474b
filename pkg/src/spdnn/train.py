"""Minibatch training of the penalized objective by manual backprop + Adam.

The objective is mean loss over the sample plus lambda times the clipped L1
norm of the parameter vector.  The risk term is differentiated exactly by
backpropagation (clamp gradient zero outside [-F, F], ReLU gradient zero at
0, L1-loss gradient zero at a tie); the penalty contributes its chosen
subgradient at every minibatch step.  Training stops when the full-sample
training MSE has not improved by more than ``IMPROVEMENT_TOL`` for
``patience`` consecutive epochs, and the parameters achieving the best
full-sample objective are restored.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import SupervisedSet
from .errors import ConfigurationError, DivergenceError, ShapeError
from .loss import LossKind, loss_functions
from .network import ACTIVATIONS, Architecture, Network, flatten_params, load_params, new_network
from .penalty import PenaltyConfig, clipped_norm, l0_norm
from .rng import derive_seed, make_rng

#: an epoch "improves" only if it beats the best training MSE by more than this
IMPROVEMENT_TOL = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    patience: int = 30
    max_epochs: int = 2000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ConfigurationError("Adam betas must lie in (0, 1)")
        if self.learning_rate <= 0 or self.adam_eps <= 0:
            raise ConfigurationError("learning_rate and adam_eps must be positive")
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ConfigurationError("batch_size, patience, max_epochs must be >= 1")


@dataclass(frozen=True)
class TrainedModel:
    network: Network
    history: np.ndarray          # full-sample objective per epoch
    stopped_epoch: int
    best_objective: float
    best_epoch: int
    risk_history: np.ndarray
    penalty_history: np.ndarray
    mse_history: np.ndarray
    l0_history: np.ndarray


@dataclass(frozen=True)
class AdamState:
    theta: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def init(cls, theta: np.ndarray) -> "AdamState":
        theta = np.asarray(theta, dtype=np.float64)
        return cls(theta.copy(), np.zeros_like(theta), np.zeros_like(theta), 0)


def adam_step(state: AdamState, grad: np.ndarray, cfg: TrainConfig) -> tuple[np.ndarray, AdamState]:
    """One Adam update with bias correction; returns (new theta, new state)."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.theta.shape:
        raise ShapeError(f"gradient shape {grad.shape} != state shape {state.theta.shape}")
    theta = state.theta.copy()
    m = state.m.copy()
    v = state.v.copy()
    t = state.t + 1
    _adam_update(theta, m, v, grad, t, cfg)
    new_state = AdamState(theta, m, v, t)
    return theta, new_state


def _adam_update(theta, m, v, grad, t, cfg, tmp=None, tmp2=None):
    # in place: m <- b1 m + (1-b1) g ; v <- b2 v + (1-b2) g^2 ;
    # theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    if tmp is None:
        tmp = np.empty_like(theta)
    if tmp2 is None:
        tmp2 = np.empty_like(theta)
    np.multiply(m, b1, out=m)
    np.multiply(grad, 1.0 - b1, out=tmp)
    m += tmp
    np.multiply(v, b2, out=v)
    np.multiply(grad, grad, out=tmp)
    tmp *= 1.0 - b2
    v += tmp
    np.divide(v, 1.0 - b2 ** t, out=tmp)
    np.sqrt(tmp, out=tmp)
    tmp += cfg.adam_eps
    np.divide(m, 1.0 - b1 ** t, out=tmp2)
    tmp2 /= tmp
    tmp2 *= cfg.learning_rate
    theta -= tmp2


def _param_views(theta: np.ndarray, widths: tuple[int, ...]):
    """F-order (W, b) views into a flat parameter buffer (no copies)."""
    views = []
    offset = 0
    for j in range(len(widths) - 1):
        fan_in, fan_out = widths[j], widths[j + 1]
        W = theta[offset:offset + fan_in * fan_out].reshape((fan_in, fan_out), order="F")
        offset += fan_in * fan_out
        b = theta[offset:offset + fan_out]
        offset += fan_out
        views.append((W, b))
    return views


def _forward_layers(layers, act_fn, F, X):
    A = X
    for W, b in layers[:-1]:
        Z = A @ W
        Z += b
        A = act_fn(Z)
    W, b = layers[-1]
    raw = (A @ W).ravel()
    raw += b[0]
    return np.clip(raw, -F, F)


def _risk_gradient(layers, activation, F, X, y, loss, grad_views):
    """Exact gradient of the mean loss on (X, y); written into grad_views."""
    act_fn, act_deriv = activation.fn, activation.deriv
    n = X.shape[0]
    pres = []
    acts = [X]
    A = X
    for W, b in layers[:-1]:
        Z = A @ W
        Z += b
        A = act_fn(Z)
        pres.append(Z)
        acts.append(A)
    W, b = layers[-1]
    raw = (A @ W).ravel()
    raw += b[0]
    pred = np.clip(raw, -F, F)

    dpred = loss.grad(pred, y)
    dpred /= n
    clamped = np.abs(raw) > F
    if clamped.any():
        dpred[clamped] = 0.0  # clamp gradient is zero outside [-F, F]

    delta = dpred[:, None]
    gW, gb = grad_views[-1]
    np.matmul(acts[-1].T, delta, out=gW)
    gb[0] = delta.sum()
    for j in range(len(layers) - 2, -1, -1):
        W_next = layers[j + 1][0]
        delta = delta @ W_next.T
        delta *= act_deriv(pres[j])
        gW, gb = grad_views[j]
        np.matmul(acts[j].T, delta, out=gW)
        np.sum(delta, axis=0, out=gb)
    return pred


def backprop(net: Network, batch: SupervisedSet, kind: LossKind) -> np.ndarray:
    """Gradient of the mean loss over ``batch`` w.r.t. the canonical parameters."""
    if len(batch) == 0:
        raise ValueError("cannot backpropagate over an empty batch")
    if batch.dim != net.arch.input_dim:
        raise ShapeError(f"batch dim {batch.dim} != network input dim {net.arch.input_dim}")
    grad = np.zeros(net.arch.param_count)
    grad_views = _param_views(grad, net.arch.widths)
    _risk_gradient(net.layers, ACTIVATIONS[net.activation], net.arch.output_bound,
                   batch.X, batch.y, loss_functions(kind.name), grad_views)
    return grad


def train_spdnn(data: SupervisedSet, arch: Architecture, pen: PenaltyConfig,
                kind: LossKind, cfg: TrainConfig, activation: str = "relu") -> TrainedModel:
    """Fit the penalized objective; lam = 0 reproduces the unpenalized fit."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty sample")
    if data.dim != arch.input_dim:
        raise ShapeError(f"data dim {data.dim} != architecture input dim {arch.input_dim}")

    template = new_network(arch, "glorot", cfg.seed, activation)
    theta = flatten_params(template)
    widths = arch.widths
    F = arch.output_bound
    act = ACTIVATIONS[activation]
    loss = loss_functions(kind.name)
    lam, tau = pen.lam, pen.tau

    views = _param_views(theta, widths)
    grad = np.zeros_like(theta)
    grad_views = _param_views(grad, widths)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    tmp = np.empty_like(theta)
    tmp2 = np.empty_like(theta)
    sub = np.empty_like(theta)
    t_adam = 0

    shuffle_rng = make_rng(derive_seed(cfg.seed, "shuffle"))
    n = len(data)
    X, y = data.X, data.y

    best_obj = np.inf
    best_theta = theta.copy()
    best_epoch = 0
    best_mse = np.inf
    stale = 0

    objectives, risks, penalties, mses, l0s = [], [], [], [], []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _risk_gradient(views, act, F, X[idx], y[idx], loss, grad_views)
            if lam != 0.0:
                # lam * chosen subgradient of the clipped norm, fused in place
                np.sign(theta, out=sub)
                sub *= lam / tau
                np.abs(theta, out=tmp)
                sub[tmp > tau] = 0.0
                grad += sub
            t_adam += 1
            _adam_update(theta, m, v, grad, t_adam, cfg, tmp, tmp2)

        preds = _forward_layers(views, act.fn, F, X)
        err = preds - y
        mse = float(np.mean(err * err))
        risk = float(np.mean(loss.eval(preds, y)))
        pen_value = lam * clipped_norm(theta, tau) if lam != 0.0 else 0.0
        obj = risk + pen_value
        if not np.isfinite(obj):
            raise DivergenceError(f"objective became non-finite at epoch {epoch}", epoch=epoch)

        objectives.append(obj)
        risks.append(risk)
        penalties.append(pen_value)
        mses.append(mse)
        l0s.append(l0_norm(theta))

        if obj < best_obj:
            best_obj = obj
            best_theta[:] = theta
            best_epoch = epoch
        if mse < best_mse - IMPROVEMENT_TOL:
            best_mse = mse
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    return TrainedModel(
        network=load_params(template, best_theta),
        history=np.array(objectives),
        stopped_epoch=epoch,
        best_objective=best_obj,
        best_epoch=best_epoch,
        risk_history=np.array(risks),
        penalty_history=np.array(penalties),
        mse_history=np.array(mses),
        l0_history=np.array(l0s, dtype=np.int64),
    )


def train_npdnn(data: SupervisedSet, arch: Architecture, kind: LossKind,
                cfg: TrainConfig, activation: str = "relu") -> TrainedModel:
    """Unpenalized fit: the lam = 0 special case of :func:`train_spdnn`."""
    return train_spdnn(data, arch, PenaltyConfig(0.0, 1.0), kind, cfg, activation)


def write_training_log(model: TrainedModel, path) -> None:
    """CSV log: one row per epoch with objective, risk, penalty, and l0."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "objective", "risk", "penalty", "l0"])
        for i in range(len(model.history)):
            writer.writerow([i + 1, repr(float(model.history[i])),
                             repr(float(model.risk_history[i])),
                             repr(float(model.penalty_history[i])),
                             int(model.l0_history[i])])
