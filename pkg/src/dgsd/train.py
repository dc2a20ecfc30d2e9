"""Training loop.

Each step follows the same fixed order: project W onto the non-negative
orthant (elementwise ReLU), rebuild the Laplacian and Chebyshev basis
from the projected W, run the forward pass, form the three-part
self-distillation loss, backpropagate, and update parameters. W is an
ordinary trainable parameter under the optimizer by default; the verbatim
update rule W = (1 - rho) W + rho dLoss/dW is available as
w_update="literal_eq12" for fidelity experiments (note it ascends the
loss as written).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Sgd
from .errors import ConfigError, NumericError, SplitError
from .features import DeFeatureMatrix
from .losses import (LossBreakdown, LossWeights, combine, cross_entropy,
                     feature_distillation, hierarchical_distillation,
                     self_distillation_loss)
from .model import (DgsdConfig, DgsdModel, forward, init_model,
                    model_from_bytes, model_to_bytes)

EVAL_CHUNK = 512


@dataclass
class TrainConfig:
    learning_rate: float = 0.004
    batch_size: int = 32
    epochs: int = 200
    seed: int = 1111
    weights: LossWeights = field(default_factory=LossWeights)
    split: tuple = (0.8, 0.1, 0.1)
    optimizer: str = "adam"  # "adam" | "sgd"
    w_update: str = "descent"  # "descent" | "literal_eq12"
    early_stop_patience: int | None = 30  # epochs without val improvement; None disables
    kl_direction: str = "teacher"

    def __post_init__(self):
        # 0 is allowed so the null-update diagnostic case runs.
        if self.learning_rate < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if len(self.split) != 3 or any(r < 0 for r in self.split):
            raise ConfigError(f"split must be 3 non-negative ratios, got {self.split}")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {self.split}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.w_update not in ("descent", "literal_eq12"):
            raise ConfigError(f"unknown w_update mode {self.w_update!r}")


@dataclass
class EpochRecord:
    epoch: int
    loss: LossBreakdown
    val_accuracy: float


@dataclass
class TrainReport:
    epochs: list
    best_epoch: int
    best_val_accuracy: float | None
    test_accuracy: float
    n_train: int
    n_val: int
    n_test: int
    checkpoint: bytes
    windows_backpropagated: int
    # positions of each split inside the feature list passed to fit()
    train_indices: list = field(default_factory=list)
    val_indices: list = field(default_factory=list)
    test_indices: list = field(default_factory=list)


def split_dataset(items, ratios=(0.8, 0.1, 0.1), seed: int = 1111):
    """Seed-determined random split into (train, val, test).

    Floor allocation for val/test, remainder to train, so 100 windows at
    8:1:1 give 80/10/10 and 10 give 8/1/1.
    """
    n = len(items)
    if n < 10:
        raise SplitError(f"need at least 10 windows to split, got {n}")
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must be 3 values summing to 1, got {ratios}")
    perm = np.random.default_rng(seed).permutation(n)
    n_val = math.floor(ratios[1] * n)
    n_test = math.floor(ratios[2] * n)
    n_train = n - n_val - n_test
    train = [items[i] for i in perm[:n_train]]
    val = [items[i] for i in perm[n_train:n_train + n_val]]
    test = [items[i] for i in perm[n_train + n_val:]]
    return train, val, test


def project_w(model: DgsdModel) -> None:
    """Elementwise ReLU on the adjacency matrix: w_ij <- max(w_ij, 0).
    Idempotent; runs at the top of every training step."""
    np.maximum(model.adjacency.data, 0.0, out=model.adjacency.data)


def update_w_literal(model: DgsdModel, grad_w: np.ndarray, rho: float) -> None:
    """The verbatim dynamic-adjacency rule: W = (1 - rho) W + rho dLoss/dW."""
    if not np.isfinite(grad_w).all():
        raise NumericError("non-finite adjacency gradient")
    model.adjacency.data = ((1.0 - rho) * model.adjacency.data
                            + rho * grad_w).astype(model.dtype)


def train_step(model: DgsdModel, batch, config: TrainConfig, optimizer) -> LossBreakdown:
    """One optimization step; returns the pre-update loss values."""
    batch_x, batch_y = batch
    if len(batch_x) == 0:
        raise ConfigError("empty batch")
    project_w(model)
    trace = forward(model, batch_x)
    total, breakdown = self_distillation_loss(
        trace, batch_y, config.weights, config.kl_direction)
    if not math.isfinite(breakdown.total):
        raise NumericError(
            f"non-finite loss (loss1={breakdown.loss1}, loss2={breakdown.loss2}, "
            f"loss3={breakdown.loss3})")
    for p in model.parameters():
        p.grad = None
    total.backward()
    if config.w_update == "literal_eq12":
        grad_w = model.adjacency.grad
        if grad_w is None:
            grad_w = np.zeros_like(model.adjacency.data)
        update_w_literal(model, grad_w, config.learning_rate)
    optimizer.step()
    return breakdown


def evaluate_accuracy(model: DgsdModel, x: np.ndarray, y: np.ndarray) -> float:
    """Fraction of windows whose deepest-classifier argmax matches y."""
    hits = 0
    for start in range(0, len(x), EVAL_CHUNK):
        chunk = x[start:start + EVAL_CHUNK]
        dist = forward(model, chunk).distributions[-1].data
        hits += int((np.argmax(dist, axis=1) == y[start:start + EVAL_CHUNK]).sum())
    return hits / len(x)


def _stack(features) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for f in features:
        if isinstance(f, DeFeatureMatrix):
            xs.append(f.values)
            ys.append(int(f.label))
        else:
            values, label = f
            xs.append(np.asarray(values))
            ys.append(int(label))
    return np.stack(xs).astype(np.float32), np.asarray(ys, dtype=np.int64)


def make_optimizer(model: DgsdModel, config: TrainConfig):
    params = model.parameters()
    if config.w_update == "literal_eq12":
        params = [p for p in params if p is not model.adjacency]
    if config.optimizer == "adam":
        return Adam(params, lr=config.learning_rate)
    return Sgd(params, lr=config.learning_rate)


def fit(features, config: TrainConfig, model_config: DgsdConfig | None = None) -> TrainReport:
    """Train on a window list, select the best-validation-accuracy epoch
    (earliest wins ties), report test accuracy of that checkpoint.

    Runs config.epochs epochs, stopping early after
    config.early_stop_patience epochs without a new best validation
    accuracy. Validation and test windows never reach a gradient; the
    report's `windows_backpropagated` counter proves it.
    """
    indices = list(range(len(features)))
    train_idx, val_idx, test_idx = split_dataset(indices, config.split, config.seed)
    x_train, y_train = _stack([features[i] for i in train_idx])
    x_val, y_val = _stack([features[i] for i in val_idx])
    x_test, y_test = _stack([features[i] for i in test_idx])

    if model_config is None:
        model_config = DgsdConfig(n_nodes=x_train.shape[1], in_features=x_train.shape[2])
    model = init_model(model_config, config.seed)
    optimizer = make_optimizer(model, config)
    shuffle_rng = np.random.default_rng(config.seed)

    records: list[EpochRecord] = []
    best_val: float | None = None
    best_epoch = 0
    best_blob = model_to_bytes(model)
    backpropagated = 0

    for epoch in range(1, config.epochs + 1):
        perm = shuffle_rng.permutation(len(x_train))
        sums = np.zeros(4)
        for start in range(0, len(perm), config.batch_size):
            sel = perm[start:start + config.batch_size]
            breakdown = train_step(model, (x_train[sel], y_train[sel]), config, optimizer)
            weight = len(sel)
            sums += weight * np.array(
                [breakdown.loss1, breakdown.loss2, breakdown.loss3, breakdown.total])
            backpropagated += weight
        mean_loss = LossBreakdown(*(sums / len(x_train)))
        val_acc = evaluate_accuracy(model, x_val, y_val)
        records.append(EpochRecord(epoch, mean_loss, val_acc))
        if best_val is None or val_acc > best_val:
            best_val = val_acc
            best_epoch = epoch
            best_blob = model_to_bytes(model)
        elif (config.early_stop_patience is not None
              and epoch - best_epoch >= config.early_stop_patience):
            break

    best_model = model_from_bytes(best_blob)
    test_acc = evaluate_accuracy(best_model, x_test, y_test)
    return TrainReport(
        epochs=records,
        best_epoch=best_epoch,
        best_val_accuracy=best_val,
        test_accuracy=test_acc,
        n_train=len(x_train),
        n_val=len(x_val),
        n_test=len(x_test),
        checkpoint=best_blob,
        windows_backpropagated=backpropagated,
        train_indices=train_idx,
        val_indices=val_idx,
        test_indices=test_idx,
    )


def gradient_check(model: DgsdModel, batch, weights: LossWeights | None = None,
                   epsilon: float = 1e-4, kl_direction: str = "teacher") -> float:
    """Compare backpropagated gradients of every parameter (W, all theta,
    heads, classifiers) against central finite differences; returns the
    worst relative error. Requires a float64 model.

    The teacher targets entering loss2/loss3 are frozen at the evaluation
    point so the finite differences respect the stop-gradient semantics;
    the backpropagated gradient at that point is unchanged by the freeze.
    """
    if model.dtype != np.float64:
        raise ConfigError("gradient_check needs a float64 model")
    batch_x, batch_y = batch
    if weights is None:
        weights = LossWeights()

    base = forward(model, batch_x)
    teacher_feats = ad.Tensor(base.pooled_features[-1].data.copy())
    teacher_dist = ad.Tensor(base.distributions[-1].data.copy())

    def loss_value():
        trace = forward(model, batch_x)
        loss1 = cross_entropy(trace.distributions[-1], batch_y)
        loss2 = feature_distillation(
            list(trace.pooled_features[:-1]) + [teacher_feats])
        loss3 = hierarchical_distillation(
            list(trace.distributions[:-1]) + [teacher_dist], kl_direction)
        return combine(loss1, loss2, loss3, weights)

    total = loss_value()
    for p in model.parameters():
        p.grad = None
    total.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in model.parameters()]

    worst = 0.0
    for p, grads in zip(model.parameters(), analytic):
        flat = p.data.reshape(-1)
        gflat = grads.reshape(-1)
        for j in range(flat.size):
            saved = flat[j]
            flat[j] = saved + epsilon
            f_plus = loss_value().item()
            flat[j] = saved - epsilon
            f_minus = loss_value().item()
            flat[j] = saved
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            denom = max(abs(gflat[j]), abs(numeric))
            err = abs(gflat[j] - numeric)
            if denom > 1e-8:
                err /= denom
            worst = max(worst, err)
    return worst


def init_model_f64(config: DgsdConfig, seed: int) -> DgsdModel:
    """Float64 twin of init_model, for gradient checks and oracles."""
    return init_model(config, seed, dtype=np.float64)
