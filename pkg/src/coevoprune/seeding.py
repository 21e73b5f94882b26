"""Deterministic seed derivation.

Every stochastic component draws from its own numpy Generator, derived
from a trial-level integer seed plus a purpose tag. Derivation is a pure
function of (seed, tags), so results never depend on the order in which
streams are created or consumed by different workers.
"""

from __future__ import annotations

import numpy as np

# Purpose tags keep streams for different jobs statistically independent
# even when they share the same trial seed.
TAG_CENTROIDS = 1
TAG_TRAIN = 2
TAG_TEST = 3
TAG_HELDOUT = 4
TAG_INIT = 5
TAG_CELL = 6


def substream(seed: int, *tags: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *tags)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def subseed(seed: int, *tags: int) -> int:
    """A plain integer seed derived from (seed, *tags).

    Used where an API takes an int seed that also gets recorded in output
    files (dataset headers, manifests).
    """
    return int(np.random.SeedSequence([int(seed), *map(int, tags)]).generate_state(1)[0])
