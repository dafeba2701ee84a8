"""Exact classical enumeration of the reset protocol."""

from .tree import (
    MAX_EXACT_DENOMINATOR,
    OutcomeLeaf,
    OutcomeTree,
    enumerate_outcomes,
    oracle_p_dis,
    oracle_p_reset,
)

__all__ = [
    "MAX_EXACT_DENOMINATOR",
    "OutcomeLeaf",
    "OutcomeTree",
    "enumerate_outcomes",
    "oracle_p_dis",
    "oracle_p_reset",
]
