"""
Per-trial random streams derived from one master seed.

derive_trial_seed is counter-mode SplitMix64: the state master + (index + 1) * γ
(mod 2**64) is passed through the SplitMix64 finalizer. Golden values are kept
in tests/data/trial_seed_vectors.csv.
"""

from __future__ import annotations

from typing import Final

import numpy as np
from typeguard import typechecked


MASK64: Final[int] = (1 << 64) - 1
GOLDEN_GAMMA: Final[int] = 0x9E3779B97F4A7C15
_MIX1: Final[int] = 0xBF58476D1CE4E5B9
_MIX2: Final[int] = 0x94D049BB133111EB


@typechecked
def derive_trial_seed(master: int, index: int) -> int:
    if not 0 <= master <= MASK64:
        raise ValueError(f"master seed must be an unsigned 64-bit integer, got {master}")
    if index < 0:
        raise ValueError(f"trial index must be >= 0, got {index}")
    z = (master + (index + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def trial_rng(master: int, index: int) -> np.random.Generator:
    """PCG64 generator for one trial."""
    return np.random.default_rng(derive_trial_seed(int(master), int(index)))
