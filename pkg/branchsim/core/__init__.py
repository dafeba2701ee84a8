"""Dense state-vector algebra over register layouts."""

from .linalg import (
    MAX_OPERATOR_DIM,
    MAX_TOTAL_DIM,
    NORM_TOLERANCE,
    UNITARITY_TOLERANCE,
    Operator,
    Register,
    SpaceLayout,
    StateVector,
    adjoint,
    apply,
    compose,
    embed,
    inner,
    normalize,
    permutation_operator,
    require_dense_capacity,
    tensor,
)

__all__ = [
    "MAX_OPERATOR_DIM",
    "MAX_TOTAL_DIM",
    "NORM_TOLERANCE",
    "UNITARITY_TOLERANCE",
    "Operator",
    "Register",
    "SpaceLayout",
    "StateVector",
    "adjoint",
    "apply",
    "compose",
    "embed",
    "inner",
    "normalize",
    "permutation_operator",
    "require_dense_capacity",
    "tensor",
]
