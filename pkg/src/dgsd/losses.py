"""The self-distillation training objective.

Three components: cross-entropy of the deepest classifier against the
label (loss1), mean-squared distance from each shallow pooled feature
vector to the deepest one (loss2), and KL divergence between each shallow
class distribution and the deepest one (loss3), combined as

    total = alpha * loss1 + (1 - alpha) * loss2 + beta * loss3.

The deepest layer is the teacher: its features and distribution enter
loss2/loss3 as detached constants, so distillation never pushes gradients
into the teacher.

Every function accepts autodiff Tensors (returning a scalar Tensor) or
plain arrays/floats (returning a float); batched inputs are averaged over
the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, DimensionError, NumericError

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.7
    beta: float = 0.3

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ConfigError(
                f"loss weights must lie in [0, 1], got alpha={self.alpha}, beta={self.beta}")


@dataclass
class LossBreakdown:
    loss1: float  # cross-entropy, nats
    loss2: float  # feature distillation, squared-distance units
    loss3: float  # hierarchical distillation, nats
    total: float


def _is_tensor(x) -> bool:
    return isinstance(x, ad.Tensor)


def _raw(x) -> np.ndarray:
    return x.data if _is_tensor(x) else np.asarray(x, dtype=np.float64)


def _scalar(x) -> float:
    return x.item() if _is_tensor(x) else float(x)


def _check_distribution(arr: np.ndarray, what: str) -> None:
    if (arr < -1e-6).any() or (arr > 1.0 + 1e-6).any():
        raise NumericError(f"{what} has entries outside [0, 1]")
    if not np.allclose(arr.sum(axis=-1), 1.0, atol=1e-5):
        raise NumericError(f"{what} rows do not sum to 1")


def _as_rows(p):
    """Promote a single distribution to a 1-row batch (Tensor or ndarray)."""
    if _raw(p).ndim == 1:
        n = _raw(p).shape[0]
        return p.reshape(1, n) if _is_tensor(p) else _raw(p).reshape(1, n)
    return p


def cross_entropy(p, y):
    """-ln p[y] with the probability floored at 1e-12; batch mean.

    `p` is the deepest-layer distribution (single vector or batch of
    rows), `y` a class index or an index per row.
    """
    _check_distribution(_raw(p), "class distribution")
    p = _as_rows(p)
    rows, classes = _raw(p).shape
    y_idx = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if y_idx.shape != (rows,):
        raise DimensionError(f"{rows} distributions but {y_idx.shape} labels")
    if ((y_idx < 0) | (y_idx >= classes)).any():
        raise DimensionError(f"label out of range for {classes} classes")
    onehot = np.zeros((rows, classes), dtype=_raw(p).dtype)
    onehot[np.arange(rows), y_idx] = 1.0
    if _is_tensor(p):
        return -(p.maximum(PROB_FLOOR).log() * onehot).sum(axis=1).mean()
    picked = np.maximum(_raw(p)[np.arange(rows), y_idx], PROB_FLOOR)
    return float(-np.log(picked).mean())


def feature_distillation(features) -> float | ad.Tensor:
    """Sum over shallow layers of the mean squared difference to the
    deepest feature vector (the teacher side is detached)."""
    feats = list(features)
    if len(feats) < 2:
        raise DimensionError("feature distillation needs at least 2 layers")
    dim = _raw(feats[-1]).shape[-1]
    for f in feats:
        if _raw(f).shape[-1] != dim:
            raise DimensionError("pooled feature vectors have mismatched lengths")
    teacher = feats[-1].detach() if _is_tensor(feats[-1]) else _raw(feats[-1])
    total = None
    for f in feats[:-1]:
        term = ((f - teacher) ** 2).mean()
        total = term if total is None else total + term
    return total if _is_tensor(total) else float(total)


def hierarchical_distillation(distributions, direction: str = "teacher"):
    """Sum over shallow layers of the KL divergence to the deepest
    distribution, teacher detached.

    direction="teacher" computes KL(p_n || p_i) (expectation under the
    teacher); direction="student" computes KL(p_i || p_n).
    """
    if direction not in ("teacher", "student"):
        raise ConfigError(f"unknown KL direction {direction!r}")
    dists = list(distributions)
    if len(dists) < 2:
        raise DimensionError("hierarchical distillation needs at least 2 layers")
    for d in dists:
        _check_distribution(_raw(d), "class distribution")
    rows = [_as_rows(d) for d in dists]
    teacher = _raw(rows[-1])
    t_floored = np.maximum(teacher, PROB_FLOOR)
    total = None
    for p in rows[:-1]:
        if _is_tensor(p):
            log_student = p.maximum(PROB_FLOOR).log()
            if direction == "teacher":
                const = (teacher * np.log(t_floored)).sum(axis=-1)  # entropy term
                term = (const - (log_student * teacher).sum(axis=1)).mean()
            else:
                term = ((log_student - np.log(t_floored)) * p).sum(axis=1).mean()
        else:
            s_floored = np.maximum(_raw(p), PROB_FLOOR)
            if direction == "teacher":
                term = float((teacher * (np.log(t_floored) - np.log(s_floored))).sum(axis=-1).mean())
            else:
                term = float((_raw(p) * (np.log(s_floored) - np.log(t_floored))).sum(axis=-1).mean())
        total = term if total is None else total + term
    return total


def combine(loss1, loss2, loss3, weights: LossWeights):
    """The affine combination; gradient w.r.t. each component equals its
    weight."""
    return (weights.alpha * loss1
            + (1.0 - weights.alpha) * loss2
            + weights.beta * loss3)


def self_distillation_loss(trace, labels, weights: LossWeights,
                           kl_direction: str = "teacher"):
    """All three components from one ForwardTrace.

    Returns (total, breakdown): total keeps the Tensor graph for
    backpropagation, breakdown holds plain floats.
    """
    loss1 = cross_entropy(trace.distributions[-1], labels)
    loss2 = feature_distillation(trace.pooled_features)
    loss3 = hierarchical_distillation(trace.distributions, kl_direction)
    total = combine(loss1, loss2, loss3, weights)
    breakdown = LossBreakdown(
        _scalar(loss1), _scalar(loss2), _scalar(loss3), _scalar(total))
    return total, breakdown
