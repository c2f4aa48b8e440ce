"""Deterministic seed derivation for nested stochastic stages.

Every stochastic stage (per-function pools, per-trial experiments, evaluation
pools) draws its seed from the run's root seed plus a fixed integer path, so
results do not depend on execution order or worker count.
"""

from __future__ import annotations

import numpy as np


def derive_seed(root_seed: int, *path: int) -> int:
    """A child seed that depends only on ``root_seed`` and ``path``."""
    ss = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])
