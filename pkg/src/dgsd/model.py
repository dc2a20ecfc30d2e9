"""The DGSD network.

Four (by default) residual Chebyshev graph-convolution layers share one
learnable adjacency matrix. After every layer a linear feature head plus
mean pooling over electrodes produces a graph-level feature vector F_i,
and a small classifier turns it into a class distribution p_i. The
deepest (F_n, p_n) act as teacher targets during training; inference uses
only the deepest classifier.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, DataFormatError, DimensionError, NumericError
from .features import DeFeatureMatrix, Label
from .graph import chebyshev_basis, estimate_lambda_max, graph_conv, laplacian, rescale_laplacian

CHECKPOINT_MAGIC = b"DGSD1"


@dataclass
class DgsdConfig:
    n_nodes: int
    in_features: int = 5
    hidden: int = 32
    n_layers: int = 4
    cheb_order: int = 3
    n_classes: int = 2
    feature_head_dim: int = 32
    # Re-convolve the projected input at every layer instead of the
    # running state (the non-composing literal reading of the layer rule).
    reconv_input: bool = False

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ConfigError(f"n_nodes must be >= 1, got {self.n_nodes}")
        if self.n_layers < 2:
            raise ConfigError("distillation needs at least 2 layers (1 student + teacher)")
        if self.hidden < 1 or self.feature_head_dim < 1:
            raise ConfigError("hidden and feature_head_dim must be positive")
        if self.cheb_order < 1:
            raise ConfigError(f"cheb_order must be >= 1, got {self.cheb_order}")
        if self.n_classes < 2:
            raise ConfigError(f"n_classes must be >= 2, got {self.n_classes}")


@dataclass
class ForwardTrace:
    """Per-layer outputs of one forward pass (autodiff Tensors).

    For a single window the entries are (N, hidden), (head_dim,) and
    (n_classes,); batched input adds a leading batch axis everywhere.
    """

    layer_states: list
    pooled_features: list
    logits: list
    distributions: list


class DgsdModel:
    """Parameter container; all tensors are trainable."""

    def __init__(self, config: DgsdConfig, adjacency, input_w, input_b,
                 layer_thetas, head_w, head_b, cls_w, cls_b):
        self.config = config
        self.adjacency = adjacency
        self.input_w = input_w
        self.input_b = input_b
        self.layer_thetas = layer_thetas  # n layers x K tensors (hidden, hidden)
        self.head_w = head_w
        self.head_b = head_b
        self.cls_w = cls_w
        self.cls_b = cls_b

    @property
    def dtype(self):
        return self.adjacency.data.dtype

    def parameters(self) -> list:
        """All trainable tensors, in the fixed declaration order used by
        the checkpoint format."""
        params = [self.adjacency, self.input_w, self.input_b]
        for thetas in self.layer_thetas:
            params.extend(thetas)
        for w, b in zip(self.head_w, self.head_b):
            params.extend([w, b])
        for w, b in zip(self.cls_w, self.cls_b):
            params.extend([w, b])
        return params


def parameter_count(config: DgsdConfig) -> int:
    """Exact number of trainable scalars, adjacency included."""
    n, d = config.n_nodes, config.in_features
    h, m, c = config.hidden, config.feature_head_dim, config.n_classes
    layers, k = config.n_layers, config.cheb_order
    return (n * n
            + d * h + h
            + layers * k * h * h
            + layers * (h * m + m)
            + layers * (m * c + c))


def _parameter_shapes(config: DgsdConfig) -> list[tuple]:
    n, d = config.n_nodes, config.in_features
    h, m, c = config.hidden, config.feature_head_dim, config.n_classes
    shapes = [(n, n), (d, h), (h,)]
    shapes += [(h, h)] * (config.n_layers * config.cheb_order)
    shapes += [(h, m), (m,)] * config.n_layers
    shapes += [(m, c), (c,)] * config.n_layers
    return shapes


def _build(config: DgsdConfig, arrays: list[np.ndarray]) -> DgsdModel:
    it = iter(ad.Tensor(a, requires_grad=True) for a in arrays)
    adjacency = next(it)
    input_w, input_b = next(it), next(it)
    thetas = [[next(it) for _ in range(config.cheb_order)] for _ in range(config.n_layers)]
    head_w, head_b, cls_w, cls_b = [], [], [], []
    for _ in range(config.n_layers):
        head_w.append(next(it))
        head_b.append(next(it))
    for _ in range(config.n_layers):
        cls_w.append(next(it))
        cls_b.append(next(it))
    return DgsdModel(config, adjacency, input_w, input_b, thetas,
                     head_w, head_b, cls_w, cls_b)


def init_model(config: DgsdConfig, seed: int, dtype=np.float32) -> DgsdModel:
    """Deterministic initialization.

    W ~ Uniform[0.01, 0.5] symmetrized (a positive, connected starting
    graph); weights fan-in-scaled uniform; biases zero. The theta fan-in
    counts all K basis terms feeding each output.
    """
    rng = np.random.default_rng(seed)
    n, d = config.n_nodes, config.in_features
    h, m, c = config.hidden, config.feature_head_dim, config.n_classes

    def uniform_fan(shape, fan_in):
        limit = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-limit, limit, shape).astype(dtype)

    raw = rng.uniform(0.01, 0.5, (n, n))
    arrays = [np.maximum((raw + raw.T) / 2.0, 0.0).astype(dtype)]
    arrays += [uniform_fan((d, h), d), np.zeros(h, dtype=dtype)]
    for _ in range(config.n_layers):
        for _ in range(config.cheb_order):
            arrays.append(uniform_fan((h, h), h * config.cheb_order))
    for _ in range(config.n_layers):
        arrays += [uniform_fan((h, m), h), np.zeros(m, dtype=dtype)]
    for _ in range(config.n_layers):
        arrays += [uniform_fan((m, c), m), np.zeros(c, dtype=dtype)]
    return _build(config, arrays)


def forward(model: DgsdModel, x) -> ForwardTrace:
    """One pass: x_0 = input projection, then
    x_i = x_{i-1} + relu(graph_conv(x_{i-1})), with (F_i, p_i) taken after
    every layer. Accepts a DeFeatureMatrix, an (N, d) array, or a batched
    (B, N, d) array."""
    if isinstance(x, DeFeatureMatrix):
        x = x.values
    arr = np.asarray(x, dtype=model.dtype)
    cfg = model.config
    batched = arr.ndim == 3
    if not batched:
        arr = arr[None]
    if arr.shape[1:] != (cfg.n_nodes, cfg.in_features):
        raise DimensionError(
            f"features shaped {arr.shape[1:]} do not fit a model with "
            f"{cfg.n_nodes} nodes x {cfg.in_features} features")

    w = model.adjacency
    w_sym = (w + w.T) * 0.5
    lap = laplacian(w_sym)
    lam = estimate_lambda_max(lap)
    basis = chebyshev_basis(rescale_laplacian(lap, lam), cfg.cheb_order)

    state = ad.Tensor(arr) @ model.input_w + model.input_b
    x0 = state
    states, pooled, logit_list, dists = [], [], [], []
    for i in range(cfg.n_layers):
        source = x0 if cfg.reconv_input else state
        conv = graph_conv(source, basis, model.layer_thetas[i])
        state = state + conv.relu()
        if not np.isfinite(state.data).all():
            raise NumericError(f"non-finite activation in graph layer {i + 1}")
        feats = (state @ model.head_w[i] + model.head_b[i]).mean(axis=1)
        logit = feats @ model.cls_w[i] + model.cls_b[i]
        states.append(state)
        pooled.append(feats)
        logit_list.append(logit)
        dists.append(ad.softmax(logit))
    if not batched:
        states = [s.reshape(cfg.n_nodes, cfg.hidden) for s in states]
        pooled = [f.reshape(cfg.feature_head_dim) for f in pooled]
        logit_list = [l.reshape(cfg.n_classes) for l in logit_list]
        dists = [p.reshape(cfg.n_classes) for p in dists]
    return ForwardTrace(states, pooled, logit_list, dists)


def predict(model: DgsdModel, x):
    """Deepest-classifier argmax; ties resolve to the lowest class index
    (LEFT). Returns one Label for a single window, a list for a batch."""
    p = forward(model, x).distributions[-1].data
    if p.ndim == 1:
        return Label(int(np.argmax(p)))
    return [Label(int(i)) for i in np.argmax(p, axis=1)]


# -- checkpoint format -------------------------------------------------------
# magic "DGSD1" | 8 little-endian uint32 config counts | parameter tensors
# as float32 little-endian, flattened C-order, in declaration order.

def model_to_bytes(model: DgsdModel) -> bytes:
    cfg = model.config
    header = struct.pack(
        "<8I", cfg.n_nodes, cfg.in_features, cfg.hidden, cfg.n_layers,
        cfg.cheb_order, cfg.n_classes, cfg.feature_head_dim,
        int(cfg.reconv_input))
    blobs = [p.data.astype("<f4").tobytes() for p in model.parameters()]
    return CHECKPOINT_MAGIC + header + b"".join(blobs)


def model_from_bytes(blob: bytes) -> DgsdModel:
    if blob[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise DataFormatError("not a DGSD checkpoint (bad magic)")
    offset = len(CHECKPOINT_MAGIC)
    counts = struct.unpack_from("<8I", blob, offset)
    offset += struct.calcsize("<8I")
    config = DgsdConfig(
        n_nodes=counts[0], in_features=counts[1], hidden=counts[2],
        n_layers=counts[3], cheb_order=counts[4], n_classes=counts[5],
        feature_head_dim=counts[6], reconv_input=bool(counts[7]))
    arrays = []
    for shape in _parameter_shapes(config):
        n_bytes = int(np.prod(shape)) * 4
        if offset + n_bytes > len(blob):
            raise DataFormatError("checkpoint truncated")
        arr = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)),
                            offset=offset).reshape(shape)
        arrays.append(arr.astype(np.float32))
        offset += n_bytes
    if offset != len(blob):
        raise DataFormatError("checkpoint has trailing bytes")
    return _build(config, arrays)


def save_model(model: DgsdModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> DgsdModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
