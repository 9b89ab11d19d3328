"""Loss, exact reverse-mode gradients, Adam, early stopping, and k-fold CV.

The backward pass differentiates the four-term propagation rule by hand;
a central finite-difference harness validates it entry by entry. The loss
is a sum over labeled nodes (a mean variant is available as a config flag).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ClassTooSmall, EmptyLabeledSet, ShapeMismatch, TraceMismatch
from .graph_core import Graph, add_self_loops, hadamard, normalize_adjacency
from .model import ForwardTrace, ModelParams, forward, init_params, predict
from .sampler import minibatches, sample_node_subgraph


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 150
    patience: int = 10
    folds: int = 10
    alpha: float = 0.1
    beta: float = 0.3
    layers: int = 10
    hidden_dim: int = 64
    seed: int = 0
    batch_budget: int | None = None   # None = full-batch
    sampler_runs: int = 200
    loss_reduction: str = "sum"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.loss_reduction not in ("sum", "mean"):
            raise ValueError(f"loss_reduction must be sum or mean, got {self.loss_reduction}")


@dataclass
class GradientSet:
    """Gradient of the loss w.r.t. every parameter matrix; shapes mirror ModelParams."""

    input_projection: np.ndarray
    layers: list[np.ndarray]
    output_head: np.ndarray

    def matrices(self) -> list[np.ndarray]:
        return [self.input_projection, *self.layers, self.output_head]


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        mats = [params.input_projection, *params.layers, params.output_head]
        return cls(
            first_moment=[np.zeros_like(m) for m in mats],
            second_moment=[np.zeros_like(m) for m in mats],
        )


def cross_entropy(
    y_hat: np.ndarray,
    labels_onehot: np.ndarray,
    labeled_idx: Sequence[int],
    reduction: str = "sum",
) -> float:
    """Cross-entropy over the labeled rows: -sum_i sum_c Y_ic log Yhat_ic."""
    labeled = np.asarray(labeled_idx, dtype=int)
    if labeled.size == 0:
        raise EmptyLabeledSet("loss needs at least one labeled node")
    rows = np.asarray(y_hat, dtype=float)[labeled]
    onehot = np.asarray(labels_onehot, dtype=float)[labeled]
    # floor avoids -inf when a softmax row underflows to exactly 0
    loss = -float(np.sum(onehot * np.log(np.maximum(rows, 1e-300))))
    if reduction == "mean":
        loss /= labeled.size
    return loss


def _relu_mask(pre: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return (pre > 0).astype(float)
    if activation == "identity":
        return np.ones_like(pre)
    raise ValueError(f"unknown activation {activation!r}")


def backward(
    trace: ForwardTrace,
    params: ModelParams,
    a_hat_gamma: np.ndarray,
    labels_onehot: np.ndarray,
    labeled_idx: Sequence[int],
    activation: str = "relu",
    reduction: str = "sum",
) -> GradientSet:
    """Exact gradients of the cross-entropy through the full stack.

    Softmax and cross-entropy fuse to (Yhat - Y) on labeled rows. Each layer
    contributes through the diffusion term, the identity-plus-weight term,
    and both skip terms, so the projected input collects gradient from every
    layer. ReLU subgradient at 0 is taken as 0.
    """
    n_layers = len(params.layers)
    if len(trace.activations) != n_layers:
        raise TraceMismatch(
            f"trace has {len(trace.activations)} layers, params have {n_layers}"
        )
    if trace.projected_input.shape[1] != params.input_projection.shape[1]:
        raise TraceMismatch("trace hidden width disagrees with the projection")
    labeled = np.asarray(labeled_idx, dtype=int)
    if labeled.size == 0:
        raise EmptyLabeledSet("gradients need at least one labeled node")

    y_hat = predict(trace.logits)
    d_logits = np.zeros_like(y_hat)
    d_logits[labeled] = y_hat[labeled] - np.asarray(labels_onehot, dtype=float)[labeled]
    if reduction == "mean":
        d_logits /= labeled.size

    x0 = trace.projected_input
    h_last = trace.activations[-1] if n_layers else x0
    d_head = h_last.T @ d_logits
    d_h = d_logits @ params.output_head.T

    d_layers = [np.zeros_like(w) for w in params.layers]
    d_x0 = np.zeros_like(x0)
    alpha, beta = params.alpha, params.beta
    for ell in range(n_layers - 1, -1, -1):
        g = d_h * _relu_mask(trace.pre_activations[ell], activation)
        h_in = trace.activations[ell - 1] if ell > 0 else x0
        s = a_hat_gamma @ h_in
        iw = np.eye(params.layers[ell].shape[0]) + params.layers[ell]
        d_layers[ell] = beta * ((s + x0).T @ g)
        g_iw = g @ iw.T
        d_s = (1.0 - alpha) * g + beta * g_iw
        d_x0 += alpha * g + beta * g_iw
        d_h = a_hat_gamma.T @ d_s
    d_x0 += d_h  # H^(0) = x0
    d_projection = trace.raw_input.T @ d_x0
    return GradientSet(input_projection=d_projection, layers=d_layers, output_head=d_head)


def adam_step(
    params: ModelParams,
    grads: GradientSet,
    state: AdamState,
    lr: float,
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    mats = [params.input_projection, *params.layers, params.output_head]
    gmats = grads.matrices()
    if len(mats) != len(gmats) or any(m.shape != g.shape for m, g in zip(mats, gmats)):
        raise ShapeMismatch("gradient shapes do not mirror parameter shapes")
    t = state.t + 1
    new_m, new_v, updated = [], [], []
    for theta, g, m, v in zip(mats, gmats, state.first_moment, state.second_moment):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        updated.append(theta - lr * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m)
        new_v.append(v)
    new_params = ModelParams(
        input_projection=updated[0],
        layers=updated[1:-1],
        output_head=updated[-1],
        alpha=params.alpha,
        beta=params.beta,
    )
    new_state = AdamState(
        first_moment=new_m,
        second_moment=new_v,
        t=t,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return new_params, new_state


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> list[np.ndarray]:
    """k disjoint folds covering all indices, class proportions off by <= 1."""
    labels = np.asarray(labels, dtype=int)
    folds: list[list[int]] = [[] for _ in range(k)]
    rng = np.random.default_rng([seed, 11])
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < k:
            raise ClassTooSmall(f"class {cls} has {idx.size} members, needs >= {k}")
        idx = rng.permutation(idx)
        for f in range(k):
            folds[f].extend(int(v) for v in idx[f::k])
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def stratified_holdout(
    labels: Sequence[int], pool: np.ndarray, frac: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Split `pool` into (rest, held-out) keeping at least one of each class held out."""
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng([seed, 13])
    held: list[int] = []
    for cls in np.unique(labels[pool]):
        idx = pool[labels[pool] == cls]
        take = max(1, int(round(frac * idx.size)))
        held.extend(int(v) for v in rng.permutation(idx)[:take])
    held_arr = np.sort(np.array(held, dtype=int))
    rest = np.setdiff1d(pool, held_arr)
    return rest, held_arr


class EarlyStopper:
    """Stops after `patience` consecutive epochs without strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.stale = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record one epoch; returns True when training should stop."""
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = epoch
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience


def one_hot(labels: Sequence[int], n_classes: int | None = None) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    c = n_classes if n_classes is not None else int(labels.max()) + 1
    c = max(c, 2)
    out = np.zeros((labels.size, c))
    out[np.arange(labels.size), labels] = 1.0
    return out


def train(
    config: TrainConfig,
    graph: Graph,
    gamma: np.ndarray,
    features: np.ndarray,
    labels: Sequence[int],
    train_idx: np.ndarray,
    val_idx: np.ndarray,
    activation: str = "relu",
) -> tuple[ModelParams, list[tuple[int, float, float]]]:
    """Fit the model; returns (best-validation-epoch params, per-epoch history).

    History rows are (epoch, train_loss, val_loss) recorded at the end of
    each epoch. Training stops early once the validation loss has failed to
    improve on its best value for `patience` consecutive epochs, and the
    parameters from the best epoch are returned.
    """
    train_idx = np.asarray(train_idx, dtype=int)
    val_idx = np.asarray(val_idx, dtype=int)
    if np.intersect1d(train_idx, val_idx).size:
        raise ValueError("train and validation index sets must be disjoint")
    features = np.asarray(features, dtype=float)
    labels_oh = one_hot(labels)
    a_hat = normalize_adjacency(add_self_loops(graph))
    op = hadamard(a_hat, gamma)

    rng = np.random.default_rng([config.seed, 0])
    params = init_params(
        f_in=features.shape[1],
        f_hidden=config.hidden_dim,
        n_classes=labels_oh.shape[1],
        n_layers=config.layers,
        alpha=config.alpha,
        beta=config.beta,
        rng=rng,
    )
    state = AdamState.for_params(params)
    stopper = EarlyStopper(config.patience)
    best_params = params.copy()
    history: list[tuple[int, float, float]] = []
    if config.max_epochs == 0:
        return best_params, history

    train_mask = np.zeros(graph.n, dtype=bool)
    train_mask[train_idx] = True
    for epoch in range(1, config.max_epochs + 1):
        if config.batch_budget is None or config.batch_budget >= graph.n:
            trace = forward(params, a_hat, gamma, features, activation)
            grads = backward(
                trace, params, op, labels_oh, train_idx, activation, config.loss_reduction
            )
            params, state = adam_step(params, grads, state, config.learning_rate)
        else:
            n_batches = -(-graph.n // config.batch_budget)  # ceil
            samples = [
                sample_node_subgraph(
                    graph, config.batch_budget, np.random.default_rng([config.seed, 2, epoch, b])
                )
                for b in range(n_batches)
            ]
            for batch in minibatches(samples, config.batch_budget):
                batch_train = batch[train_mask[batch]]
                if batch_train.size == 0:
                    continue
                sub = np.ix_(batch, batch)
                pos = {int(v): p for p, v in enumerate(batch)}
                labeled_local = np.array([pos[int(v)] for v in batch_train], dtype=int)
                trace = forward(params, a_hat[sub], gamma[sub], features[batch], activation)
                grads = backward(
                    trace,
                    params,
                    op[sub],
                    labels_oh[batch],
                    labeled_local,
                    activation,
                    config.loss_reduction,
                )
                params, state = adam_step(params, grads, state, config.learning_rate)

        trace = forward(params, a_hat, gamma, features, activation)
        y_hat = predict(trace.logits)
        train_loss = cross_entropy(y_hat, labels_oh, train_idx, config.loss_reduction)
        val_loss = cross_entropy(y_hat, labels_oh, val_idx, config.loss_reduction)
        history.append((epoch, train_loss, val_loss))
        should_stop = stopper.update(epoch, val_loss)
        if stopper.best_epoch == epoch:
            best_params = params.copy()
        if should_stop:
            break
    return best_params, history


def finite_difference_check(
    params: ModelParams,
    a_hat_gamma: np.ndarray,
    x_raw: np.ndarray,
    labels_onehot: np.ndarray,
    labeled_idx: Sequence[int],
    eps: float = 1e-5,
    activation: str = "relu",
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Perturbs every parameter entry by eps * max(1, |theta|) in both
    directions; the relative error denominator is floored at 1e-8.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    ones = np.ones_like(a_hat_gamma)

    def loss_of(p: ModelParams) -> float:
        trace = forward(p, a_hat_gamma, ones, x_raw, activation)
        return cross_entropy(predict(trace.logits), labels_onehot, labeled_idx)

    trace = forward(params, a_hat_gamma, ones, x_raw, activation)
    grads = backward(trace, params, a_hat_gamma, labels_onehot, labeled_idx, activation)
    worst = 0.0
    work = params.copy()
    mats = [work.input_projection, *work.layers, work.output_head]
    for mat, grad in zip(mats, grads.matrices()):
        it = np.nditer(mat, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            theta = mat[ix]
            step = eps * max(1.0, abs(theta))
            mat[ix] = theta + step
            hi = loss_of(work)
            mat[ix] = theta - step
            lo = loss_of(work)
            mat[ix] = theta
            numeric = (hi - lo) / (2.0 * step)
            analytic = grad[ix]
            denom = max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


@dataclass
class FoldResult:
    fold: int
    test_idx: np.ndarray
    probs: np.ndarray            # test rows of the softmax output
    history: list[tuple[int, float, float]]
    params: ModelParams


def cross_validate(
    config: TrainConfig,
    graph: Graph,
    gamma: np.ndarray,
    features: np.ndarray,
    labels: Sequence[int],
    val_frac: float = 0.1,
) -> list[FoldResult]:
    """Stratified k-fold evaluation; each fold trains on the rest with an
    inner stratified validation split for early stopping."""
    labels = np.asarray(labels, dtype=int)
    a_hat = normalize_adjacency(add_self_loops(graph))
    folds = stratified_kfold(labels, config.folds, config.seed)
    results = []
    for f, test_idx in enumerate(folds):
        pool = np.setdiff1d(np.arange(graph.n), test_idx)
        fold_seed = int(np.random.SeedSequence([config.seed, 17, f]).generate_state(1)[0])
        tr_idx, val_idx = stratified_holdout(labels, pool, val_frac, fold_seed)
        fold_config = replace(config, seed=fold_seed)
        params, history = train(fold_config, graph, gamma, features, labels, tr_idx, val_idx)
        trace = forward(params, a_hat, gamma, features)
        probs = predict(trace.logits)[test_idx]
        results.append(FoldResult(fold=f, test_idx=test_idx, probs=probs, history=history, params=params))
    return results
