"""Observer macrostates, branch decomposition and Born-rule readout."""

from .model import (
    PRUNE_THRESHOLD,
    Branch,
    BranchDecomposition,
    BranchGroup,
    MacrostateRegister,
    born_weights,
    collapse_to,
    decompose,
    decompose_register,
    project_onto,
    require_fresh,
    sample_macrostate,
)

__all__ = [
    "PRUNE_THRESHOLD",
    "Branch",
    "BranchDecomposition",
    "BranchGroup",
    "MacrostateRegister",
    "born_weights",
    "collapse_to",
    "decompose",
    "decompose_register",
    "project_onto",
    "require_fresh",
    "sample_macrostate",
]
