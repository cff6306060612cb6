"""Shared test helpers and fixtures."""

import numpy as np
import pytest

from boxmon.bdd import BddManager


def bdd_from_strings(mgr: BddManager, strings):
    """Build the set of the given bit strings via literal and/or chains."""
    acc = mgr.mk_false()
    for bits in strings:
        cube = mgr.mk_true()
        for m, ch in enumerate(bits, start=1):
            lit = mgr.mk_var(m) if ch == "1" else mgr.not_(mgr.mk_var(m))
            cube = mgr.and_(cube, lit)
        acc = mgr.or_(acc, cube)
    return acc


def random_string_set(rng: np.random.Generator, n_vars: int, max_size: int = 15):
    """A random set of distinct bit strings over n_vars variables."""
    size = int(rng.integers(0, max_size + 1))
    picks = {
        "".join(rng.choice(["0", "1"], size=n_vars)) for _ in range(size)
    }
    return picks


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
