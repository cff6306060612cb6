"""Boxed-abstraction monitors over feature vectors.

A monitor is a family of k axis-aligned boxes built from the feature
vectors of a training set at one network layer, plus a per-box buffer
width ``delta`` used both for the tightness requirement and for carving
corner regions out of each box.  A feature vector is accepted when it
lies inside at least one box (closed containment) and rejected
otherwise.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.cluster import KMeans

from .boxes import Box, CornerRegion
from .encoding import corner_region, encode, iter_corner_strings
from .errors import (
    ConfigError,
    ConstructionError,
    EmptyDataError,
    EnumerationCapError,
    InputShapeError,
    ParseError,
)

# Enumerating corners of a d-dimensional box touches 2**d strings; above
# this many dimensions we refuse rather than hang.
MAX_ENUMERABLE_DIM = 20


def _as_matrix(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise InputShapeError(f"{name} must be a 2-d array, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptyDataError(f"{name} contains no rows")
    if not np.all(np.isfinite(arr)):
        raise InputShapeError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking the three defining monitor conditions.

    ``boxes_well_formed``: every box has the right dimension and ordered
    bounds.  ``data_covered``: every supplied feature vector falls inside
    some box.  ``bounds_tight``: for each box, dimension and side, some
    feature vector comes within delta of that bound.
    """

    boxes_well_formed: bool
    malformed_box: int | None
    data_covered: bool
    uncovered_row: int | None
    bounds_tight: bool
    loose_bound: tuple[int, int, str] | None

    @property
    def ok(self) -> bool:
        return self.boxes_well_formed and self.data_covered and self.bounds_tight


class BoxMonitor(BaseEstimator):
    """k-box out-of-distribution monitor with a scikit-learn flavoured API.

    Parameters
    ----------
    k:
        Number of boxes.  Features are split into k groups by k-means
        and each group gets its bounding box.
    delta_fraction:
        Per-dimension buffer width as a fraction of the box width.
        Must lie in [0, 0.5) so the two buffer strips never swallow a
        non-degenerate box.
    phi:
        Bits per dimension in the symbolic encoding (at least 2).
    layer:
        Index of the network layer the monitored features come from.
        Stored for bookkeeping and serialization; fit() itself only
        sees the feature matrix.
    random_state:
        Seed for the clustering step.

    After fit(): ``boxes_`` (list of Box, sorted lexicographically by
    lower bounds), ``deltas_`` (list of per-dimension buffer arrays) and
    ``n_features_in_``.
    """

    def __init__(
        self,
        k: int = 1,
        delta_fraction: float = 0.05,
        phi: int = 3,
        layer: int = 1,
        random_state: int = 0,
    ):
        self.k = k
        self.delta_fraction = delta_fraction
        self.phi = phi
        self.layer = layer
        self.random_state = random_state

    # -- construction -------------------------------------------------

    def _check_params(self) -> None:
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if not 0.0 <= self.delta_fraction < 0.5:
            raise ConfigError(
                f"delta_fraction must lie in [0, 0.5), got {self.delta_fraction!r}"
            )
        if not isinstance(self.phi, (int, np.integer)) or self.phi < 2:
            raise ConfigError(f"phi must be an integer >= 2, got {self.phi!r}")
        if not isinstance(self.layer, (int, np.integer)) or self.layer < 1:
            raise ConfigError(f"layer must be a positive integer, got {self.layer!r}")

    def fit(self, X, y=None) -> "BoxMonitor":
        """Build boxes around the rows of X.  y is ignored."""
        self._check_params()
        X = _as_matrix(X, "features")
        n_distinct = len(np.unique(X, axis=0))
        if n_distinct < self.k:
            raise ConstructionError(
                f"need at least k={self.k} distinct feature vectors, got {n_distinct}"
            )
        if self.k == 1:
            labels = np.zeros(X.shape[0], dtype=int)
        else:
            km = KMeans(
                n_clusters=self.k,
                init="k-means++",
                n_init=1,
                max_iter=100,
                algorithm="lloyd",
                random_state=self.random_state,
            )
            labels = km.fit_predict(X)
        boxes = []
        for c in range(self.k):
            members = X[labels == c]
            if members.shape[0] == 0:
                raise ConstructionError(f"clustering produced an empty group ({c})")
            boxes.append(Box(members.min(axis=0), members.max(axis=0)))
        boxes.sort(key=lambda b: (tuple(b.lower), tuple(b.upper)))
        self.boxes_ = boxes
        self.deltas_ = [self.delta_fraction * b.width for b in boxes]
        self.n_features_in_ = X.shape[1]
        return self

    def _require_fitted(self) -> None:
        if not hasattr(self, "boxes_"):
            raise ConstructionError("monitor is not fitted; call fit() first")

    # -- membership ---------------------------------------------------

    def contains(self, feature) -> tuple[bool, int | None]:
        """Closed containment test.  Returns (accepted, box index or None);
        when several boxes contain the feature the lowest index wins."""
        self._require_fitted()
        f = np.asarray(feature, dtype=float).reshape(-1)
        if f.shape[0] != self.n_features_in_:
            raise InputShapeError(
                f"feature has dimension {f.shape[0]}, monitor expects {self.n_features_in_}"
            )
        for i, box in enumerate(self.boxes_):
            if box.contains(f):
                return True, i
        return False, None

    def predict(self, X) -> np.ndarray:
        """+1 for accepted rows (inside some box), -1 for rejected."""
        self._require_fitted()
        X = _as_matrix(X, "features")
        return np.where(self.box_indices(X) >= 0, 1, -1)

    def box_indices(self, X) -> np.ndarray:
        """Per row: index of the first containing box, or -1."""
        self._require_fitted()
        X = _as_matrix(X, "features")
        if X.shape[1] != self.n_features_in_:
            raise InputShapeError(
                f"features have dimension {X.shape[1]}, monitor expects {self.n_features_in_}"
            )
        out = np.full(X.shape[0], -1, dtype=int)
        for i in reversed(range(len(self.boxes_))):
            b = self.boxes_[i]
            inside = np.all((X >= b.lower) & (X <= b.upper), axis=1)
            out[inside] = i
        return out

    # -- corners ------------------------------------------------------

    def corner_count(self, box_index: int) -> int:
        box = self._box(box_index)
        return 2 ** int(np.count_nonzero(box.width > 0))

    def corners(self, box_index: int) -> Iterator[CornerRegion]:
        """Yield every corner region of one box in lexicographic bit order.

        Degenerate dimensions (zero width) contribute only their all-zeros
        block, so the yield count is 2**(number of non-degenerate dims).
        """
        box = self._box(box_index)
        delta = self.deltas_[box_index]
        if box.dim > MAX_ENUMERABLE_DIM:
            raise EnumerationCapError(
                f"box has {box.dim} dimensions; refusing to enumerate more than "
                f"2**{MAX_ENUMERABLE_DIM} corners"
            )
        zeros = "0" * self.phi
        ones = "1" * self.phi
        options = [(zeros,) if box.width[j] == 0 else (zeros, ones) for j in range(box.dim)]
        for blocks in itertools.product(*options):
            bits = "".join(blocks)
            yield corner_region(box, delta, self.phi, bits, box_index=box_index)

    def corner_at(self, box_index: int, bits: str) -> CornerRegion:
        box = self._box(box_index)
        return corner_region(box, self.deltas_[box_index], self.phi, bits, box_index=box_index)

    def encode(self, box_index: int, feature) -> str:
        """Symbolic encoding of a feature relative to one box."""
        box = self._box(box_index)
        return encode(box, self.deltas_[box_index], self.phi, feature)

    def is_supported(self, region: CornerRegion, X) -> bool:
        """True when at least one row of X lies inside the corner region."""
        X = _as_matrix(X, "features")
        return bool(
            np.any(np.all((X >= region.lower) & (X <= region.upper), axis=1))
        )

    def _box(self, box_index: int) -> Box:
        self._require_fitted()
        if not 0 <= box_index < len(self.boxes_):
            raise IndexError(f"box index {box_index} out of range [0, {len(self.boxes_)})")
        return self.boxes_[box_index]

    # -- validation ---------------------------------------------------

    def validate(self, X) -> ValidationReport:
        """Check the three defining conditions against a feature matrix."""
        self._require_fitted()
        X = _as_matrix(X, "features")
        if X.shape[1] != self.n_features_in_:
            raise InputShapeError(
                f"features have dimension {X.shape[1]}, monitor expects {self.n_features_in_}"
            )
        malformed = None
        for i, box in enumerate(self.boxes_):
            if box.dim != self.n_features_in_ or np.any(box.lower > box.upper):
                malformed = i
                break
        idx = self.box_indices(X)
        missing = np.flatnonzero(idx < 0)
        uncovered = int(missing[0]) if missing.size else None
        loose = None
        for i, box in enumerate(self.boxes_):
            if loose is not None:
                break
            d = self.deltas_[i]
            for j in range(box.dim):
                col = X[:, j]
                if not np.any((col >= box.lower[j]) & (col <= box.lower[j] + d[j])):
                    loose = (i, j, "lower")
                    break
                if not np.any((col >= box.upper[j] - d[j]) & (col <= box.upper[j])):
                    loose = (i, j, "upper")
                    break
        return ValidationReport(
            boxes_well_formed=malformed is None,
            malformed_box=malformed,
            data_covered=uncovered is None,
            uncovered_row=uncovered,
            bounds_tight=loose is None,
            loose_bound=loose,
        )

    # -- serialization ------------------------------------------------

    def to_json_dict(self) -> dict:
        self._require_fitted()
        return {
            "layer": int(self.layer),
            "phi": int(self.phi),
            "delta_fraction": float(self.delta_fraction),
            "boxes": [
                {
                    "lower": [float(v) for v in b.lower],
                    "upper": [float(v) for v in b.upper],
                    "delta": [float(v) for v in d],
                }
                for b, d in zip(self.boxes_, self.deltas_)
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "BoxMonitor":
        try:
            boxes_raw = obj["boxes"]
            mon = cls(
                k=len(boxes_raw),
                delta_fraction=float(obj["delta_fraction"]),
                phi=int(obj["phi"]),
                layer=int(obj["layer"]),
            )
            if not boxes_raw:
                raise EmptyDataError("monitor file lists no boxes")
            boxes = [Box(np.asarray(b["lower"], dtype=float), np.asarray(b["upper"], dtype=float)) for b in boxes_raw]
            deltas = [np.asarray(b["delta"], dtype=float) for b in boxes_raw]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed monitor object: missing or bad field ({exc})") from exc
        dim = boxes[0].dim
        for b, d in zip(boxes, deltas):
            if b.dim != dim or d.shape != (dim,):
                raise ParseError("monitor boxes disagree on dimension")
            if np.any(d < 0):
                raise ParseError("monitor delta must be non-negative")
        mon.boxes_ = boxes
        mon.deltas_ = deltas
        mon.n_features_in_ = dim
        return mon


# -- feature matrix files ---------------------------------------------

def write_features_csv(X, path) -> None:
    """Write a feature matrix as CSV with header f0,f1,..."""
    X = _as_matrix(X, "features")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def read_features_csv(path) -> np.ndarray:
    """Read a feature matrix written by write_features_csv."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if not header or not all(h.strip() == f"f{j}" for j, h in enumerate(header)):
            raise ParseError(f"{path}: row 1: expected header f0,f1,...")
        dim = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim:
                raise ParseError(f"{path}: row {lineno}: expected {dim} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise EmptyDataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)
