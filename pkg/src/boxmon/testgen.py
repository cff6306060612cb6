"""Optimization-based test input generation.

Given an unsupported corner region, minimize

    loss(x) = -lam * crossentropy(f(x), y) + ||feature_l(x) - p_c||_2

over the input x with Adam, where p_c is the center of the corner
region.  Driving the norm term down steers the layer-l feature into the
corner; the negated cross-entropy term pushes the prediction away from
the true class y.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .boxes import CornerRegion
from .errors import ConfigError, InputShapeError, LayerIndexError, ParseError
from .monitor import BoxMonitor
from .network import LossSpec, Network, feature_at, forward, input_gradient, loss_value


@dataclass(frozen=True)
class TestGenConfig:
    __test__ = False  # not a pytest class, despite the name

    lam: float = 1.0
    steps: int = 500
    learning_rate: float = 0.05
    input_clamp: tuple | None = None  # (low, high), scalars or per-dim arrays
    seed: int = 0
    # uniform jitter radius applied to the start point, so that several
    # seeded attempts at the same corner explore different basins
    init_noise: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lam must be >= 0, got {self.lam}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.init_noise < 0:
            raise ConfigError(f"init_noise must be >= 0, got {self.init_noise}")
        if self.input_clamp is not None:
            lo, hi = self.input_clamp
            if np.any(np.asarray(lo) > np.asarray(hi)):
                raise ConfigError("input_clamp lower bound exceeds upper bound")


@dataclass(frozen=True)
class TestGenReport:
    __test__ = False  # not a pytest class, despite the name

    corner_box: int
    corner_bits: str
    x_perturbed: np.ndarray
    loss_trace: tuple[float, ...]
    start_feature_distance: float
    feature_corner_distance: float
    input_distance: float
    class_before: int
    class_after: int
    in_corner: bool
    monitor_accepts: bool


def corner_loss(net: Network, x, y, p_c, lam: float, l: int) -> float:
    """-lam * crossentropy(f(x), y) + ||feature_l(x) - p_c||_2."""
    spec = _loss_spec(y, p_c, lam, l)
    return loss_value(net, spec, x)


def _loss_spec(y, p_c, lam: float, l: int) -> LossSpec:
    if lam < 0:
        raise ConfigError(f"lam must be >= 0, got {lam}")
    y = np.asarray(y, dtype=float).reshape(-1)
    if lam == 0.0:
        return LossSpec(feature_layer=l, feature_target=p_c)
    return LossSpec(ce_weight=-lam, ce_target=y, feature_layer=l, feature_target=p_c)


def _clamp(x: np.ndarray, clamp) -> np.ndarray:
    if clamp is None:
        return x
    lo, hi = clamp
    return np.clip(x, lo, hi)


def generate_test_case(
    net: Network,
    x0,
    y,
    corner: CornerRegion,
    mon: BoxMonitor,
    cfg: TestGenConfig,
) -> TestGenReport:
    """Adam descent on the input; returns the iterate with the smallest
    feature distance among the misclassified ones, else the final iterate.

    in_corner and monitor_accepts are re-derived from the returned input
    via the region and monitor containment tests, never taken from the
    optimizer's own bookkeeping.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x0.shape[0] != net.input_dim:
        raise InputShapeError(
            f"x0 has dimension {x0.shape[0]}, network expects {net.input_dim}"
        )
    l = int(mon.layer)
    if not 1 <= l <= net.depth:
        raise LayerIndexError(f"monitor layer {l} out of range [1, {net.depth}]")
    d_l = net.layers[l - 1].d_out
    if corner.dim != d_l:
        raise InputShapeError(
            f"corner region has dimension {corner.dim}, layer {l} emits {d_l}"
        )
    p_c = corner.center
    spec = _loss_spec(y, p_c, cfg.lam, l)
    true_class = int(np.argmax(y))
    class_before = int(np.argmax(forward(net, x0)))
    start_distance = float(np.linalg.norm(feature_at(net, l, x0) - p_c))

    rng = np.random.default_rng(cfg.seed)
    x = x0.copy()
    if cfg.init_noise > 0:
        x = x + rng.uniform(-cfg.init_noise, cfg.init_noise, size=x.shape)
    x = _clamp(x, cfg.input_clamp)

    def snapshot(xc):
        feat = feature_at(net, l, xc)
        dist = float(np.linalg.norm(feat - p_c))
        pred = int(np.argmax(forward(net, xc)))
        return dist, pred

    trace = [loss_value(net, spec, x)]
    dist, pred = snapshot(x)
    if cfg.lam == 0.0 and corner.contains(feature_at(net, l, x)):
        # already steered; nothing to optimize
        return _report(net, mon, corner, x0, x, trace, start_distance, class_before, l)

    best_x, best_dist = (x.copy(), dist) if pred != true_class else (None, np.inf)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    b1, b2, eps = 0.9, 0.999, 1e-8
    for step in range(1, cfg.steps + 1):
        g = input_gradient(net, spec, x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g**2
        mhat = m / (1 - b1**step)
        vhat = v / (1 - b2**step)
        x = _clamp(x - cfg.learning_rate * mhat / (np.sqrt(vhat) + eps), cfg.input_clamp)
        trace.append(loss_value(net, spec, x))
        dist, pred = snapshot(x)
        if pred != true_class and dist < best_dist:
            best_x, best_dist = x.copy(), dist
    chosen = best_x if best_x is not None else x
    return _report(net, mon, corner, x0, chosen, trace, start_distance, class_before, l)


def _report(net, mon, corner, x0, x, trace, start_distance, class_before, l):
    feat = feature_at(net, l, x)
    return TestGenReport(
        corner_box=corner.box_index,
        corner_bits=corner.bits,
        x_perturbed=x,
        loss_trace=tuple(float(t) for t in trace),
        start_feature_distance=start_distance,
        feature_corner_distance=float(np.linalg.norm(feat - corner.center)),
        input_distance=float(np.linalg.norm(x - x0)),
        class_before=class_before,
        class_after=int(np.argmax(forward(net, x))),
        in_corner=bool(corner.contains(feat)),
        monitor_accepts=bool(mon.contains(feat)[0]),
    )


# -- report files ----------------------------------------------------------

def report_to_dict(r: TestGenReport, include_trace: bool = False) -> dict:
    out = {
        "corner_box": r.corner_box,
        "corner_bits": r.corner_bits,
        "x_perturbed": [float(v) for v in r.x_perturbed],
        "start_feature_distance": r.start_feature_distance,
        "feature_corner_distance": r.feature_corner_distance,
        "input_distance": r.input_distance,
        "class_before": r.class_before,
        "class_after": r.class_after,
        "in_corner": r.in_corner,
        "monitor_accepts": r.monitor_accepts,
    }
    if include_trace:
        out["loss_trace"] = list(r.loss_trace)
    return out


def write_reports_json(reports: list[TestGenReport], path, include_trace=False) -> None:
    with open(path, "w") as fh:
        json.dump(
            [report_to_dict(r, include_trace) for r in reports],
            fh,
            sort_keys=True,
            indent=1,
        )
        fh.write("\n")


def write_trace_csv(report: TestGenReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss"])
        for i, v in enumerate(report.loss_trace):
            w.writerow([i, repr(v)])


def read_reports_json(path) -> list[dict]:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, list):
        raise ParseError(f"{path}: expected a JSON array of reports")
    return obj
