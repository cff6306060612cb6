"""Small dense feedforward classifiers in plain numpy.

Networks are immutable value objects: L >= 2 dense layers, relu on every
hidden layer, softmax on the last.  Training returns a new network and
can freeze a prefix of layers, in which case the returned network shares
the frozen weight arrays with its input (so the prefix is bit-identical,
not merely close).  Everything is float64 and seeded, so repeated runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    EmptyDataError,
    InputShapeError,
    LayerIndexError,
    ParseError,
)

_ACTIVATIONS = ("relu", "softmax")


@dataclass(frozen=True, eq=False)
class DenseLayer:
    weights: np.ndarray  # (d_in, d_out)
    bias: np.ndarray  # (d_out,)
    activation: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise InputShapeError(f"weights must be 2-d, got shape {w.shape}")
        if b.shape != (w.shape[1],):
            raise InputShapeError(
                f"bias shape {b.shape} does not match weights {w.shape}"
            )
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(
                f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def d_in(self) -> int:
        return self.weights.shape[0]

    @property
    def d_out(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple[DenseLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 2:
            raise InputShapeError("a network needs at least 2 layers")
        for i, layer in enumerate(layers[:-1], start=1):
            if layer.activation != "relu":
                raise ConfigError(f"hidden layer {i} must use relu")
            if layer.d_out != layers[i].d_in:
                raise InputShapeError(
                    f"layer {i} emits {layer.d_out} values but layer {i + 1} "
                    f"expects {layers[i].d_in}"
                )
        if layers[-1].activation != "softmax":
            raise ConfigError("the final layer must use softmax")
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def layer_dims(self) -> list[int]:
        return [self.layers[0].d_in] + [l.d_out for l in self.layers]

    @property
    def input_dim(self) -> int:
        return self.layers[0].d_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].d_out


def init_network(layer_dims: Sequence[int], seed: int = 0) -> Network:
    """Fresh network with uniform +-sqrt(6/(d_in+d_out)) weights, zero bias."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 3:
        raise ConfigError("layer_dims needs at least 3 entries (input, hidden, output)")
    if any(d < 1 for d in dims):
        raise ConfigError(f"layer sizes must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    layers = []
    for i in range(len(dims) - 1):
        d_in, d_out = dims[i], dims[i + 1]
        bound = np.sqrt(6.0 / (d_in + d_out))
        w = rng.uniform(-bound, bound, size=(d_in, d_out))
        act = "softmax" if i == len(dims) - 2 else "relu"
        layers.append(DenseLayer(w, np.zeros(d_out), act))
    return Network(tuple(layers))


# -- forward evaluation ------------------------------------------------

def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _apply(layer: DenseLayer, a: np.ndarray) -> np.ndarray:
    z = a @ layer.weights + layer.bias
    if layer.activation == "relu":
        return np.maximum(z, 0.0)
    return _softmax(z)


def _check_input(net: Network, x: np.ndarray, batch: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    want = 2 if batch else 1
    if x.ndim != want:
        raise InputShapeError(f"expected a {want}-d array, got shape {x.shape}")
    if x.shape[-1] != net.input_dim:
        raise InputShapeError(
            f"input has dimension {x.shape[-1]}, network expects {net.input_dim}"
        )
    return x


def forward(net: Network, x) -> np.ndarray:
    """Output distribution for one input vector."""
    a = _check_input(net, x, batch=False)
    for layer in net.layers:
        a = _apply(layer, a)
    return a


def forward_batch(net: Network, X) -> np.ndarray:
    A = _check_input(net, X, batch=True)
    for layer in net.layers:
        A = _apply(layer, A)
    return A


def feature_at(net: Network, layer: int, x) -> np.ndarray:
    """Post-activation vector of layer `layer` (1-based) for one input."""
    if not 1 <= layer <= net.depth:
        raise LayerIndexError(f"layer {layer} out of range [1, {net.depth}]")
    a = _check_input(net, x, batch=False)
    for l in net.layers[:layer]:
        a = _apply(l, a)
    return a


def features_at(net: Network, layer: int, X) -> np.ndarray:
    """Batch version of feature_at."""
    if not 1 <= layer <= net.depth:
        raise LayerIndexError(f"layer {layer} out of range [1, {net.depth}]")
    A = _check_input(net, X, batch=True)
    for l in net.layers[:layer]:
        A = _apply(l, A)
    return A


def forward_from(net: Network, layer: int, F) -> np.ndarray:
    """Push post-activation features of layer `layer` through the rest of
    the network; forward_from(net, l, features_at(net, l, X)) == forward_batch(net, X)."""
    if not 1 <= layer < net.depth:
        raise LayerIndexError(f"layer {layer} out of range [1, {net.depth})")
    A = np.asarray(F, dtype=float)
    if A.ndim != 2 or A.shape[1] != net.layers[layer - 1].d_out:
        raise InputShapeError(
            f"features must be 2-d with {net.layers[layer - 1].d_out} columns, "
            f"got shape {A.shape}"
        )
    for l in net.layers[layer:]:
        A = _apply(l, A)
    return A


# -- data ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Inputs plus soft labels (rows of the label matrix are probability
    vectors; hard labels are one-hot rows)."""

    inputs: np.ndarray  # (N, d0)
    labels: np.ndarray  # (N, dL)

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if x.ndim != 2 or y.ndim != 2:
            raise InputShapeError(
                f"inputs and labels must be 2-d, got {x.shape} and {y.shape}"
            )
        if x.shape[0] != y.shape[0]:
            raise InputShapeError(
                f"{x.shape[0]} inputs but {y.shape[0]} labels"
            )
        if x.shape[0] == 0:
            raise EmptyDataError("dataset is empty")
        if np.any(y < 0) or not np.allclose(y.sum(axis=1), 1.0, atol=1e-9):
            raise DataError("each label must be non-negative and sum to 1")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @classmethod
    def from_hard_labels(cls, inputs, classes, n_classes: int) -> "LabeledDataset":
        classes = np.asarray(classes, dtype=int).reshape(-1)
        if np.any(classes < 0) or np.any(classes >= n_classes):
            raise DataError(f"class ids must lie in [0, {n_classes})")
        labels = np.zeros((classes.shape[0], n_classes))
        labels[np.arange(classes.shape[0]), classes] = 1.0
        return cls(inputs, labels)


def accuracy(net: Network, data: LabeledDataset) -> float:
    """Fraction of rows whose argmax prediction matches the argmax label."""
    pred = forward_batch(net, data.inputs).argmax(axis=1)
    return float(np.mean(pred == data.labels.argmax(axis=1)))


# -- training -----------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 0.01
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    frozen_prefix: int = 0

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs!r}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size!r}")
        if self.frozen_prefix < 0:
            raise ConfigError(f"frozen_prefix must be >= 0, got {self.frozen_prefix!r}")


def _cross_entropy(Z_last: np.ndarray, Y: np.ndarray) -> float:
    # stable -sum(y * log softmax(z)) averaged over the batch
    shifted = Z_last - Z_last.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-(Y * log_p).sum(axis=1).mean())


def _forward_trace(layers: list[tuple[np.ndarray, np.ndarray, str]], X: np.ndarray):
    """Pre-activations and activations per layer; A[0] is the input."""
    Z, A = [], [X]
    for w, b, act in layers:
        z = A[-1] @ w + b
        Z.append(z)
        A.append(np.maximum(z, 0.0) if act == "relu" else _softmax(z))
    return Z, A


def _backprop(layers, X, Y):
    """Mean cross-entropy over the batch plus gradients per layer."""
    Z, A = _forward_trace(layers, X)
    n = X.shape[0]
    loss = _cross_entropy(Z[-1], Y)
    grads = []
    dz = (A[-1] - Y) / n  # fused softmax + cross-entropy
    for i in reversed(range(len(layers))):
        w = layers[i][0]
        grads.append((A[i].T @ dz, dz.sum(axis=0)))
        if i > 0:
            dz = (dz @ w.T) * (Z[i - 1] > 0)
    grads.reverse()
    return loss, grads


def training_loss_and_grads(net: Network, X, Y):
    """Full-batch loss and weight gradients, for finite-difference checks."""
    X = _check_input(net, X, batch=True)
    Y = np.asarray(Y, dtype=float)
    layers = [(l.weights, l.bias, l.activation) for l in net.layers]
    return _backprop(layers, X, Y)


def train(net: Network, data: LabeledDataset, cfg: TrainConfig) -> Network:
    """Mini-batch training; returns a new network.

    Layers 1..cfg.frozen_prefix of the result share their arrays with
    `net`, so the frozen prefix is preserved exactly.
    """
    if data.inputs.shape[1] != net.input_dim:
        raise InputShapeError(
            f"data has dimension {data.inputs.shape[1]}, network expects {net.input_dim}"
        )
    if data.labels.shape[1] != net.output_dim:
        raise InputShapeError(
            f"labels have dimension {data.labels.shape[1]}, network emits {net.output_dim}"
        )
    if cfg.frozen_prefix >= net.depth:
        raise ConfigError(
            f"frozen_prefix={cfg.frozen_prefix} leaves no trainable layer "
            f"in a depth-{net.depth} network"
        )
    if cfg.epochs == 0:
        return net
    prefix = net.layers[: cfg.frozen_prefix]
    if cfg.frozen_prefix:
        X = features_at(net, cfg.frozen_prefix, data.inputs)
    else:
        X = data.inputs
    suffix = [
        (l.weights.copy(), l.bias.copy(), l.activation)
        for l in net.layers[cfg.frozen_prefix :]
    ]
    _fit_layers(suffix, X, data.labels, cfg)
    trained = tuple(DenseLayer(w, b, act) for w, b, act in suffix)
    return Network(prefix + trained)


def _fit_layers(layers, X, Y, cfg: TrainConfig) -> None:
    """Optimize `layers` (list of (w, b, act), mutated in place)."""
    rng = np.random.default_rng(cfg.seed)
    n = X.shape[0]
    if cfg.optimizer == "adam":
        m = [(np.zeros_like(w), np.zeros_like(b)) for w, b, _ in layers]
        v = [(np.zeros_like(w), np.zeros_like(b)) for w, b, _ in layers]
        step = 0
        b1, b2, eps = 0.9, 0.999, 1e-8
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, grads = _backprop(layers, X[idx], Y[idx])
            if cfg.optimizer == "sgd":
                for i, (dw, db) in enumerate(grads):
                    w, b, act = layers[i]
                    layers[i] = (w - cfg.learning_rate * dw, b - cfg.learning_rate * db, act)
            else:
                step += 1
                for i, (dw, db) in enumerate(grads):
                    w, b, act = layers[i]
                    mw, mb = m[i]
                    vw, vb = v[i]
                    mw = b1 * mw + (1 - b1) * dw
                    mb = b1 * mb + (1 - b1) * db
                    vw = b2 * vw + (1 - b2) * dw**2
                    vb = b2 * vb + (1 - b2) * db**2
                    m[i], v[i] = (mw, mb), (vw, vb)
                    corr1 = 1 - b1**step
                    corr2 = 1 - b2**step
                    w = w - cfg.learning_rate * (mw / corr1) / (np.sqrt(vw / corr2) + eps)
                    b = b - cfg.learning_rate * (mb / corr1) / (np.sqrt(vb / corr2) + eps)
                    layers[i] = (w, b, act)


# -- input-space losses and gradients ------------------------------------

@dataclass(frozen=True)
class LossSpec:
    """Weighted sum of a classification term and a feature-distance term.

    value(x) = ce_weight * crossentropy(f(x), ce_target)
             + ||feature_at(x, feature_layer) - feature_target||_2

    Either term may be absent (ce_weight=0 / feature_layer=None); with
    both absent the loss is constant and the gradient is zero.
    """

    ce_weight: float = 0.0
    ce_target: np.ndarray | None = None
    feature_layer: int | None = None
    feature_target: np.ndarray | None = None

    def __post_init__(self):
        if self.ce_weight != 0.0 and self.ce_target is None:
            raise ConfigError("ce_weight is set but ce_target is missing")
        if (self.feature_layer is None) != (self.feature_target is None):
            raise ConfigError("feature_layer and feature_target go together")
        if self.ce_target is not None:
            object.__setattr__(
                self, "ce_target", np.asarray(self.ce_target, dtype=float).reshape(-1)
            )
        if self.feature_target is not None:
            object.__setattr__(
                self,
                "feature_target",
                np.asarray(self.feature_target, dtype=float).reshape(-1),
            )


def _check_loss_spec(net: Network, spec: LossSpec) -> None:
    if spec.ce_target is not None and spec.ce_target.shape != (net.output_dim,):
        raise InputShapeError(
            f"ce_target has shape {spec.ce_target.shape}, network emits {net.output_dim}"
        )
    if spec.feature_layer is not None:
        if not 1 <= spec.feature_layer <= net.depth:
            raise LayerIndexError(
                f"feature_layer {spec.feature_layer} out of range [1, {net.depth}]"
            )
        want = net.layers[spec.feature_layer - 1].d_out
        if spec.feature_target.shape != (want,):
            raise InputShapeError(
                f"feature_target has shape {spec.feature_target.shape}, "
                f"layer {spec.feature_layer} emits {want}"
            )


def loss_value(net: Network, spec: LossSpec, x) -> float:
    _check_loss_spec(net, spec)
    x = _check_input(net, x, batch=False)
    layers = [(l.weights, l.bias, l.activation) for l in net.layers]
    Z, A = _forward_trace(layers, x[None, :])
    total = 0.0
    if spec.ce_weight != 0.0:
        total += spec.ce_weight * _cross_entropy(Z[-1], spec.ce_target[None, :])
    if spec.feature_layer is not None:
        total += float(
            np.linalg.norm(A[spec.feature_layer][0] - spec.feature_target)
        )
    return total


def input_gradient(net: Network, spec: LossSpec, x) -> np.ndarray:
    """d loss / d x for one input, via a single backward pass.

    The euclidean term's gradient at its kink (feature exactly on
    target) is taken to be zero.
    """
    _check_loss_spec(net, spec)
    x = _check_input(net, x, batch=False)
    layers = [(l.weights, l.bias, l.activation) for l in net.layers]
    Z, A = _forward_trace(layers, x[None, :])
    depth = len(layers)
    fgrad = None
    if spec.feature_layer is not None:
        diff = A[spec.feature_layer] - spec.feature_target[None, :]
        nrm = float(np.linalg.norm(diff))
        fgrad = diff / nrm if nrm > 0.0 else np.zeros_like(diff)
    dz = np.zeros_like(Z[-1])
    if spec.ce_weight != 0.0:
        dz += spec.ce_weight * (A[-1] - spec.ce_target[None, :])
    if spec.feature_layer == depth:
        # feature term sits on the softmax output: push through its jacobian
        p = A[-1]
        dz += p * fgrad - p * (p * fgrad).sum(axis=1, keepdims=True)
    da = dz @ layers[-1][0].T  # gradient wrt A[depth-1]
    for i in range(depth - 1, 0, -1):  # hidden layers, 1-based index i
        if spec.feature_layer == i:
            da = da + fgrad
        dz = da * (Z[i - 1] > 0)
        da = dz @ layers[i - 1][0].T
    return da[0]


# -- serialization -------------------------------------------------------

def network_to_json_dict(net: Network) -> dict:
    return {
        "layer_dims": net.layer_dims,
        "layers": [
            {
                "weights": [[float(v) for v in row] for row in l.weights],
                "bias": [float(v) for v in l.bias],
                "activation": l.activation,
            }
            for l in net.layers
        ],
    }


def network_from_json_dict(obj: dict) -> Network:
    try:
        layers = tuple(
            DenseLayer(
                np.asarray(l["weights"], dtype=float),
                np.asarray(l["bias"], dtype=float),
                str(l["activation"]),
            )
            for l in obj["layers"]
        )
        dims = [int(d) for d in obj["layer_dims"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed network object: {exc}") from exc
    net = Network(layers)
    if net.layer_dims != dims:
        raise ParseError(
            f"layer_dims {dims} disagree with stored weights {net.layer_dims}"
        )
    return net


def save_network(net: Network, path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_json_dict(net), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_network(path) -> Network:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return network_from_json_dict(obj)


# -- dataset files --------------------------------------------------------

def write_dataset_csv(data: LabeledDataset, path) -> None:
    """CSV with header x0..x{d0-1},y0..y{dL-1}."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        d0 = data.inputs.shape[1]
        dl = data.labels.shape[1]
        w.writerow([f"x{j}" for j in range(d0)] + [f"y{j}" for j in range(dl)])
        for xi, yi in zip(data.inputs, data.labels):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(v)) for v in yi])


def read_dataset_csv(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        d0 = sum(1 for h in header if h.startswith("x"))
        dl = sum(1 for h in header if h.startswith("y"))
        want = [f"x{j}" for j in range(d0)] + [f"y{j}" for j in range(dl)]
        if d0 == 0 or dl == 0 or [h.strip() for h in header] != want:
            raise ParseError(f"{path}: row 1: expected header x0..,y0..")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d0 + dl:
                raise ParseError(
                    f"{path}: row {lineno}: expected {d0 + dl} fields, got {len(row)}"
                )
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from None
            xs.append(vals[:d0])
            ys.append(vals[d0:])
    if not xs:
        raise EmptyDataError(f"{path}: no data rows")
    try:
        return LabeledDataset(np.asarray(xs), np.asarray(ys))
    except DataError as exc:
        raise ParseError(f"{path}: {exc}") from exc
