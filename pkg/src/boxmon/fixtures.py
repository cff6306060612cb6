"""Access to the small bundled demo fixture.

One monitor box over a 2-d feature space with four training features;
with the default settings exactly one corner survives prioritization.
Used by the CLI walkthrough and the regression tests.
"""

from __future__ import annotations

import json
from importlib.resources import files
from pathlib import Path

import numpy as np

from .monitor import BoxMonitor, read_features_csv


def demo_monitor_path() -> Path:
    return Path(str(files("boxmon") / "data" / "demo_monitor.json"))


def demo_features_path() -> Path:
    return Path(str(files("boxmon") / "data" / "demo_features.csv"))


def load_demo_monitor() -> BoxMonitor:
    with open(demo_monitor_path()) as fh:
        return BoxMonitor.from_json_dict(json.load(fh))


def load_demo_features() -> np.ndarray:
    return read_features_csv(demo_features_path())
