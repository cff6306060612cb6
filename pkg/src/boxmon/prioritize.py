"""Symbolic identification and prioritization of unsupported corners.

Pipeline per box: encode every training feature into a bit string and
collect the strings in a BDD (S_train); build the set of all corner
strings; subtract the supported ones; subtract everything within Hamming
distance delta_h of a training encoding; enumerate what is left.  With
several boxes, a kept corner is additionally discarded when its vertex
falls strictly inside the delta-shrunken interior of another box.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .bdd import BddManager, BddRef
from .boxes import Box, CornerRegion
from .encoding import corner_region, encode, vertex_of
from .errors import ConfigError, OutOfBoxError, ParseError
from .monitor import BoxMonitor

# min_hamming is a diagnostic computed by linear scan; above this many
# distinct encodings we skip it and report None (the symbolic guarantee
# still holds).
MIN_HAMMING_SCAN_LIMIT = 100_000

DEFAULT_CAP = 1000


def _hamming(a: str, b: str) -> int:
    return sum(x != y for x, y in zip(a, b))


def _string_to_set(mgr: BddManager, bits: str) -> BddRef:
    acc = mgr.mk_true()
    for m, bit in enumerate(bits, start=1):
        lit = mgr.mk_var(m) if bit == "1" else mgr.not_(mgr.mk_var(m))
        acc = mgr.and_(acc, lit)
    return acc


def _encode_all(features, box: Box, delta, phi: int) -> list[str]:
    out = []
    for i, f in enumerate(features):
        try:
            out.append(encode(box, delta, phi, f))
        except OutOfBoxError as exc:
            raise OutOfBoxError(f"feature {i}: {exc}") from exc
    return out


def encode_training_set(features, box: Box, delta, phi: int, mgr: BddManager) -> BddRef:
    """Union of the singleton encodings of every feature; duplicates collapse."""
    s = mgr.mk_false()
    for bits in _encode_all(features, box, delta, phi):
        s = mgr.or_(s, _string_to_set(mgr, bits))
    return s


def all_corners_set(phi: int, d_l: int, mgr: BddManager) -> BddRef:
    """The corner alphabet {0^phi, 1^phi}^{d_l} as a BDD, built with a
    number of operations linear in phi*d_l."""
    if phi < 2:
        raise ConfigError(f"phi must be >= 2, got {phi}")
    if d_l < 1:
        raise ConfigError(f"d_l must be >= 1, got {d_l}")
    acc = mgr.mk_true()
    for j in range(d_l):
        zeros = mgr.mk_true()
        ones = mgr.mk_true()
        for m in range(j * phi + 1, (j + 1) * phi + 1):
            zeros = mgr.and_(zeros, mgr.not_(mgr.mk_var(m)))
            ones = mgr.and_(ones, mgr.mk_var(m))
        acc = mgr.and_(acc, mgr.or_(zeros, ones))
    return acc


def hamming_expand(s: BddRef, delta_h: int) -> BddRef:
    """All strings within Hamming distance <= delta_h of some member of s.

    Each round snapshots the current set and unions every single-variable
    existential quantification of the snapshot, growing the ball by one.
    """
    if delta_h < 0:
        raise ConfigError(f"delta_h must be >= 0, got {delta_h}")
    mgr = s.manager
    current = s
    for _ in range(delta_h):
        snapshot = current
        for m in range(1, mgr.variable_count + 1):
            current = mgr.or_(current, mgr.exists(snapshot, m))
    return current


@dataclass(frozen=True)
class CornerReport:
    box_index: int
    bits: str
    region: CornerRegion
    vertex: np.ndarray
    min_hamming: int | None
    discarded_by: int | None = None


@dataclass
class PrioritizationResult:
    box_index: int
    result_set: BddRef
    extracted: list[CornerReport]
    delta_used: int
    stats: dict = field(default_factory=dict)

    @property
    def kept(self) -> list[CornerReport]:
        return [c for c in self.extracted if c.discarded_by is None]


def prioritize_box(
    features,
    box: Box,
    delta,
    phi: int,
    delta_h: int,
    cap_m: int = DEFAULT_CAP,
    box_index: int = 0,
) -> PrioritizationResult:
    """Unsupported corners of one box at Hamming distance >= delta_h + 1
    from every training encoding, lexicographically first cap_m extracted."""
    if cap_m < 1:
        raise ConfigError(f"cap_m must be >= 1, got {cap_m}")
    t0 = time.perf_counter()
    n_vars = phi * box.dim
    mgr = BddManager(n_vars)
    encodings = _encode_all(features, box, delta, phi)
    s_train = mgr.mk_false()
    for bits in encodings:
        s_train = mgr.or_(s_train, _string_to_set(mgr, bits))
    s_all = all_corners_set(phi, box.dim, mgr)
    s_unsup = mgr.setminus(s_all, s_train)
    ball = hamming_expand(s_train, delta_h)
    result = mgr.setminus(s_unsup, ball)

    distinct = sorted(set(encodings))
    scan = len(distinct) <= MIN_HAMMING_SCAN_LIMIT
    extracted = []
    for bits in mgr.enumerate_sat(result, cap_m):
        min_h = min((_hamming(bits, e) for e in distinct), default=None) if scan else None
        extracted.append(
            CornerReport(
                box_index=box_index,
                bits=bits,
                region=corner_region(box, delta, phi, bits, box_index=box_index),
                vertex=vertex_of(box, phi, bits),
                min_hamming=min_h,
            )
        )
    stats = {
        "variables": n_vars,
        "training_points": len(encodings),
        "distinct_encodings": len(distinct),
        "nodes": mgr.node_count(),
        "sat_train": int(mgr.sat_count(s_train)),
        "sat_corners": int(mgr.sat_count(s_all)),
        "sat_unsupported": int(mgr.sat_count(s_unsup)),
        "sat_result": int(mgr.sat_count(result)),
        "wall_time_s": time.perf_counter() - t0,
    }
    return PrioritizationResult(
        box_index=box_index,
        result_set=result,
        extracted=extracted,
        delta_used=delta_h,
        stats=stats,
    )


def cross_box_filter(mon: BoxMonitor, box_index: int, corner_bits: str) -> int | None:
    """Index of the lowest other box whose delta-shrunken interior
    strictly contains the corner's vertex, or None to keep the corner.

    Strict inequalities: a vertex exactly on a shrunken boundary is kept.
    """
    box = mon.boxes_[box_index]
    v = vertex_of(box, mon.phi, corner_bits)
    for i, other in enumerate(mon.boxes_):
        if i == box_index:
            continue
        d = mon.deltas_[i]
        if np.all(other.lower + d < v) and np.all(v < other.upper - d):
            return i
    return None


def prioritize_monitor(
    mon: BoxMonitor,
    features,
    delta_h: int,
    cap_m: int = DEFAULT_CAP,
    cross_box: bool = True,
) -> list[PrioritizationResult]:
    """Run the per-box pipeline over a whole monitor.

    Each box sees the features it geometrically contains (a feature in an
    overlap contributes to every covering box) and gets a fresh manager.
    Results come back in box-index order; with cross_box, extracted
    corners whose vertex hides inside another box are marked discarded.
    """
    X = np.asarray(features, dtype=float)
    results = []
    for i, box in enumerate(mon.boxes_):
        inside = np.all((X >= box.lower) & (X <= box.upper), axis=1)
        res = prioritize_box(
            X[inside], box, mon.deltas_[i], mon.phi, delta_h, cap_m, box_index=i
        )
        if cross_box and len(mon.boxes_) > 1:
            res.extracted = [
                CornerReport(
                    box_index=c.box_index,
                    bits=c.bits,
                    region=c.region,
                    vertex=c.vertex,
                    min_hamming=c.min_hamming,
                    discarded_by=cross_box_filter(mon, i, c.bits),
                )
                for c in res.extracted
            ]
        results.append(res)
    return results


# -- corner report files ------------------------------------------------

def corner_report_to_dict(c: CornerReport) -> dict:
    return {
        "box": c.box_index,
        "bits": c.bits,
        "vertex": [float(v) for v in c.vertex],
        "region_lower": [float(v) for v in c.region.lower],
        "region_upper": [float(v) for v in c.region.upper],
        "min_hamming": c.min_hamming,
        "discarded_by": c.discarded_by,
    }


def write_corners_jsonl(results: list[PrioritizationResult], path) -> None:
    """One corner per line, ordered by (box, bits)."""
    with open(path, "w") as fh:
        for res in sorted(results, key=lambda r: r.box_index):
            for c in sorted(res.extracted, key=lambda c: c.bits):
                fh.write(json.dumps(corner_report_to_dict(c), sort_keys=True))
                fh.write("\n")


def read_corners_jsonl(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: invalid JSON: {exc}") from None
            missing = {
                "box", "bits", "vertex", "region_lower", "region_upper",
                "min_hamming", "discarded_by",
            } - obj.keys()
            if missing:
                raise ParseError(
                    f"{path}: line {lineno}: missing fields {sorted(missing)}"
                )
            out.append(obj)
    return out
