"""Suffix retraining against unsupported corners.

The modification dataset pairs every original input's layer-l feature
with its training label, then appends rho uniformly sampled points per
corner region labeled with the uniform distribution (1/d_L, ..., 1/d_L).
Repair retrains only the layers above l on this dataset and stitches the
result onto the untouched prefix, so the monitor built on layer l stays
valid by construction.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .boxes import CornerRegion
from .errors import ConfigError, EmptyDataError, InputShapeError, ParseError
from .network import (
    DenseLayer,
    LabeledDataset,
    Network,
    TrainConfig,
    _fit_layers,
    features_at,
)


@dataclass(frozen=True, eq=False)
class ModifyDataset:
    """Feature-space training set for the suffix network.

    provenance[i] is "original" for entries lifted from the training set
    and "corner:<box>:<bits>:<sample>" for sampled corner points.
    """

    features: np.ndarray  # (N, d_l)
    labels: np.ndarray  # (N, d_L)
    provenance: tuple[str, ...]

    def __post_init__(self):
        f = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if f.ndim != 2 or y.ndim != 2 or f.shape[0] != y.shape[0]:
            raise InputShapeError(
                f"features {f.shape} and labels {y.shape} do not line up"
            )
        if f.shape[0] == 0:
            raise EmptyDataError("modify dataset is empty")
        if len(self.provenance) != f.shape[0]:
            raise InputShapeError(
                f"{len(self.provenance)} provenance tags for {f.shape[0]} entries"
            )
        if np.any(y < 0) or not np.allclose(y.sum(axis=1), 1.0, atol=1e-9):
            raise InputShapeError("every label must be a probability vector")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "provenance", tuple(str(p) for p in self.provenance))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def corner_mask(self) -> np.ndarray:
        return np.array([p != "original" for p in self.provenance])


def build_modify_dataset(
    data: LabeledDataset,
    net: Network,
    l: int,
    corners: list[CornerRegion],
    rho: int,
    seed: int = 0,
) -> ModifyDataset:
    """Original (feature, label) pairs plus rho uniform samples per corner."""
    if rho < 1:
        raise ConfigError(f"rho must be a positive integer, got {rho}")
    feats = features_at(net, l, data.inputs)
    d_l = feats.shape[1]
    d_out = net.output_dim
    if data.labels.shape[1] != d_out:
        raise InputShapeError(
            f"labels have dimension {data.labels.shape[1]}, network emits {d_out}"
        )
    rows = [feats]
    labels = [data.labels]
    provenance = ["original"] * len(data)
    if not corners:
        warnings.warn("no corners supplied; modify dataset has only original entries")
    rng = np.random.default_rng(seed)
    uniform_label = np.full(d_out, 1.0 / d_out)
    for c in corners:
        if c.dim != d_l:
            raise InputShapeError(
                f"corner region has dimension {c.dim}, layer {l} emits {d_l}"
            )
        samples = rng.uniform(c.lower, c.upper, size=(rho, d_l))
        rows.append(samples)
        labels.append(np.tile(uniform_label, (rho, 1)))
        provenance.extend(
            f"corner:{c.box_index}:{c.bits}:{i}" for i in range(rho)
        )
    return ModifyDataset(
        np.vstack(rows), np.vstack(labels), tuple(provenance)
    )


def repair(net: Network, modify: ModifyDataset, l: int, cfg: TrainConfig) -> Network:
    """Retrain layers l+1..L on the modify dataset; layers 1..l are
    returned as the very same arrays (bit-identical prefix)."""
    if not 1 <= l < net.depth:
        raise ConfigError(f"l must lie in [1, {net.depth - 1}], got {l}")
    d_l = net.layers[l - 1].d_out
    if modify.features.shape[1] != d_l:
        raise InputShapeError(
            f"modify entries have dimension {modify.features.shape[1]}, "
            f"layer {l} emits {d_l}"
        )
    if modify.labels.shape[1] != net.output_dim:
        raise InputShapeError(
            f"modify labels have dimension {modify.labels.shape[1]}, "
            f"network emits {net.output_dim}"
        )
    if cfg.epochs == 0:
        return net
    suffix = [
        (layer.weights.copy(), layer.bias.copy(), layer.activation)
        for layer in net.layers[l:]
    ]
    _fit_layers(suffix, modify.features, modify.labels, cfg)
    trained = tuple(DenseLayer(w, b, act) for w, b, act in suffix)
    return Network(net.layers[:l] + trained)


# -- csv ------------------------------------------------------------------

def write_modify_csv(modify: ModifyDataset, path) -> None:
    """Header f0..,y0..,provenance; one entry per row."""
    d_l = modify.features.shape[1]
    d_out = modify.labels.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [f"f{j}" for j in range(d_l)]
            + [f"y{j}" for j in range(d_out)]
            + ["provenance"]
        )
        for f, y, p in zip(modify.features, modify.labels, modify.provenance):
            w.writerow(
                [repr(float(v)) for v in f] + [repr(float(v)) for v in y] + [p]
            )


def read_modify_csv(path) -> ModifyDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        d_l = sum(1 for h in header if h.startswith("f"))
        d_out = sum(1 for h in header if h.startswith("y"))
        want = (
            [f"f{j}" for j in range(d_l)]
            + [f"y{j}" for j in range(d_out)]
            + ["provenance"]
        )
        if d_l == 0 or d_out == 0 or [h.strip() for h in header] != want:
            raise ParseError(f"{path}: row 1: expected header f0..,y0..,provenance")
        feats, labels, prov = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d_l + d_out + 1:
                raise ParseError(
                    f"{path}: row {lineno}: expected {d_l + d_out + 1} fields, got {len(row)}"
                )
            try:
                feats.append([float(v) for v in row[:d_l]])
                labels.append([float(v) for v in row[d_l : d_l + d_out]])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from None
            prov.append(row[-1])
    if not feats:
        raise EmptyDataError(f"{path}: no data rows")
    try:
        return ModifyDataset(np.asarray(feats), np.asarray(labels), tuple(prov))
    except InputShapeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
