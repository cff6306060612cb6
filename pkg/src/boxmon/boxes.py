"""Axis-aligned boxes and their corner regions in feature space."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputShapeError


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InputShapeError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    """Closed hyperrectangle [lower_1, upper_1] x ... x [lower_d, upper_d]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", _as_vector(self.lower, "lower"))
        object.__setattr__(self, "upper", _as_vector(self.upper, "upper"))
        if self.lower.shape != self.upper.shape:
            raise InputShapeError("lower and upper bounds differ in length")
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise InputShapeError(f"lower > upper in dimension {bad}")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, feat) -> bool:
        feat = _as_vector(feat, "feat")
        if feat.size != self.dim:
            raise InputShapeError(
                f"feature has {feat.size} dimensions, box has {self.dim}"
            )
        return bool(np.all(feat >= self.lower) and np.all(feat <= self.upper))


@dataclass(frozen=True, eq=False)
class CornerRegion:
    """Sub-box formed by picking the buffer strip at one bound per
    dimension; `bits` is the corresponding corner string."""

    box_index: int
    lower: np.ndarray
    upper: np.ndarray
    bits: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "lower", _as_vector(self.lower, "lower"))
        object.__setattr__(self, "upper", _as_vector(self.upper, "upper"))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, feat) -> bool:
        feat = _as_vector(feat, "feat")
        if feat.size != self.dim:
            raise InputShapeError(
                f"feature has {feat.size} dimensions, region has {self.dim}"
            )
        return bool(np.all(feat >= self.lower) and np.all(feat <= self.upper))
