"""Fixed-resolution binary encoding of in-box feature vectors.

Each dimension of a box maps to a block of `phi` bits: the buffer strip
at the lower bound encodes as all zeros, the strip at the upper bound as
all ones, and the remaining span splits into phi-1 equal half-open
intervals encoded as monotone staircases 0..01..1.  Corner rules win at
the shared endpoints, so the phi+1 code regions partition the closed
interval.  A dimension with zero width always emits the all-zeros block.
"""

from __future__ import annotations

import itertools

import numpy as np

from .boxes import Box, CornerRegion, _as_vector
from .errors import ConfigError, InputShapeError, NotACornerError, OutOfBoxError


def _check_phi(phi: int) -> None:
    if phi < 2:
        raise ConfigError(f"encoding resolution must be >= 2, got {phi}")


def encode(box: Box, delta, phi: int, feat) -> str:
    """Encode a feature vector inside `box` as a bit string of length
    phi * dim.  Raises OutOfBoxError if the vector leaves the box."""
    _check_phi(phi)
    delta = _as_vector(delta, "delta")
    feat = _as_vector(feat, "feat")
    if delta.size != box.dim or feat.size != box.dim:
        raise InputShapeError(
            f"expected {box.dim}-dimensional delta and feature vectors"
        )
    blocks = []
    for j in range(box.dim):
        blocks.append(_encode_dim(box.lower[j], box.upper[j], delta[j], phi, feat[j], j))
    return "".join(blocks)


def _encode_dim(a: float, b: float, d: float, phi: int, x: float, j: int) -> str:
    if d < 0:
        raise ConfigError(f"negative buffer in dimension {j}")
    if x < a or x > b:
        raise OutOfBoxError(f"value {x} outside [{a}, {b}] in dimension {j}")
    if a == b:
        return "0" * phi
    span = b - a - 2.0 * d
    if span <= 0:
        raise ConfigError(
            f"buffer strips overlap in dimension {j} (2*delta >= width)"
        )
    if x <= a + d:
        return "0" * phi
    if x >= b - d:
        return "1" * phi
    step = span / (phi - 1)
    tau = int((x - a - d) / step) + 1
    tau = min(max(tau, 1), phi - 1)
    return "0" * (phi - tau) + "1" * tau


def blocks_of(bits: str, phi: int) -> list[str]:
    _check_phi(phi)
    if len(bits) % phi != 0:
        raise InputShapeError(f"string length {len(bits)} not a multiple of {phi}")
    return [bits[i : i + phi] for i in range(0, len(bits), phi)]


def is_staircase(bits: str, phi: int) -> bool:
    """True when every block has the legal shape 0^(phi-tau) 1^tau."""
    return all(
        block == "0" * block.count("0") + "1" * block.count("1")
        for block in blocks_of(bits, phi)
    )


def is_corner_string(bits: str, phi: int) -> bool:
    return all(block in ("0" * phi, "1" * phi) for block in blocks_of(bits, phi))


def iter_corner_strings(phi: int, dim: int):
    """All corner strings over `dim` blocks, lexicographically."""
    _check_phi(phi)
    for choice in itertools.product(("0" * phi, "1" * phi), repeat=dim):
        yield "".join(choice)


def corner_region(box: Box, delta, phi: int, bits: str, box_index: int = 0) -> CornerRegion:
    """Map a corner string back to its region: per dimension the strip
    [a_j, a_j + delta_j] for a zeros block, [b_j - delta_j, b_j] for a
    ones block."""
    delta = _as_vector(delta, "delta")
    blocks = _corner_blocks(box, phi, bits)
    if delta.size != box.dim:
        raise InputShapeError(f"expected {box.dim}-dimensional delta vector")
    lower = np.where(
        [blk == "0" * phi for blk in blocks], box.lower, box.upper - delta
    )
    upper = np.where(
        [blk == "0" * phi for blk in blocks], box.lower + delta, box.upper
    )
    return CornerRegion(box_index=box_index, lower=lower, upper=upper, bits=bits)


def vertex_of(box: Box, phi: int, bits: str) -> np.ndarray:
    """The box vertex inside the corner: the lower bound for a zeros
    block, the upper bound for a ones block."""
    blocks = _corner_blocks(box, phi, bits)
    return np.where([blk == "0" * phi for blk in blocks], box.lower, box.upper)


def _corner_blocks(box: Box, phi: int, bits: str) -> list[str]:
    blocks = blocks_of(bits, phi)
    if len(blocks) != box.dim:
        raise InputShapeError(
            f"string has {len(blocks)} blocks, box has {box.dim} dimensions"
        )
    for j, block in enumerate(blocks):
        if block not in ("0" * phi, "1" * phi):
            raise NotACornerError(f"block {block!r} in dimension {j} is mixed")
    return blocks
