"""
Dense complex state vectors and operators over tensor-product register layouts.

All index arithmetic is row-major over the register order of a SpaceLayout.
States and operators are immutable once built. An operator measures its
unitarity error at construction; apply() refuses non-unitary operators.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Final, Literal, Mapping, Sequence

import numpy as np

from branchsim.exceptions import (
    CapacityError,
    DimensionMismatchError,
    EmptyBranchError,
    NonFiniteAmplitudeError,
    NonUnitaryError,
    RegisterError,
)


logger = logging.getLogger(__name__)

MAX_TOTAL_DIM: Final[int] = 1 << 20
# Dense operators are total_dim² complex128 entries; 4096 keeps one under 256 MiB.
MAX_OPERATOR_DIM: Final[int] = 1 << 12
UNITARITY_TOLERANCE: Final[float] = 1e-10
NORM_TOLERANCE: Final[float] = 1e-12

RegisterRole = Literal["observer", "environment", "ancilla"]


@dataclass(frozen=True)
class Register:
    """A named tensor factor of the universe state."""

    name: str
    dim: int
    role: RegisterRole = "environment"

    def __post_init__(self) -> None:
        if not self.name:
            raise RegisterError(self.name, "register name must be non-empty")
        if self.dim < 2:
            raise RegisterError(self.name, f"dim must be >= 2, got {self.dim}")


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered register list; the observer register, if any, comes first."""

    registers: tuple[Register, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for position, register in enumerate(self.registers):
            if register.name in seen:
                raise RegisterError(register.name, "duplicate register name")
            seen.add(register.name)
            if register.role == "observer" and position != 0:
                raise RegisterError(register.name, "observer register must be first")
        if self.total_dim > MAX_TOTAL_DIM:
            raise CapacityError(self.total_dim, MAX_TOTAL_DIM)

    @classmethod
    def of(cls, *registers: Register) -> SpaceLayout:
        return cls(tuple(registers))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(register.name for register in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(register.dim for register in self.registers)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def observer(self) -> Register | None:
        if self.registers and self.registers[0].role == "observer":
            return self.registers[0]
        return None

    def position(self, name: str) -> int:
        """Index of a register in the layout order."""
        for position, register in enumerate(self.registers):
            if register.name == name:
                return position
        raise RegisterError(name, f"unknown register; layout has {list(self.names)}")

    def register(self, name: str) -> Register:
        return self.registers[self.position(name)]

    def to_global(self, indices: Sequence[int]) -> int:
        """Map per-register indices to the global basis index."""
        if len(indices) != len(self.registers):
            raise DimensionMismatchError("to_global", len(self.registers), len(indices))
        index = 0
        for value, dim in zip(indices, self.dims):
            if not 0 <= value < dim:
                raise DimensionMismatchError("to_global", f"index < {dim}", value)
            index = index * dim + int(value)
        return index

    def to_tuple(self, index: int) -> tuple[int, ...]:
        """Map a global basis index to per-register indices."""
        if not 0 <= index < self.total_dim:
            raise DimensionMismatchError("to_tuple", f"index < {self.total_dim}", index)
        digits: list[int] = []
        for dim in reversed(self.dims):
            index, digit = divmod(index, dim)
            digits.append(digit)
        return tuple(reversed(digits))

    def concat(self, other: SpaceLayout) -> SpaceLayout:
        return SpaceLayout(self.registers + other.registers)

    def without(self, *names: str) -> SpaceLayout:
        for name in names:
            self.position(name)
        return SpaceLayout(tuple(r for r in self.registers if r.name not in names))

    def basis_index(self, values: Mapping[str, int]) -> int:
        """Global index of a basis state given by register name; missing registers are 0."""
        for name in values:
            self.position(name)
        return self.to_global([values.get(name, 0) for name in self.names])


def _as_complex_array(data: object, what: str) -> np.ndarray:
    array = np.array(data, dtype=np.complex128)
    if not np.all(np.isfinite(array)):
        raise NonFiniteAmplitudeError(what)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes of the universe state over a layout; need not be normalized."""

    layout: SpaceLayout
    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = _as_complex_array(self.amps, "state vector")
        if amps.ndim != 1 or amps.shape[0] != self.layout.total_dim:
            raise DimensionMismatchError("StateVector", self.layout.total_dim, amps.shape)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, layout: SpaceLayout, values: Mapping[str, int] | None = None) -> StateVector:
        """Computational basis state; registers not named in values sit at index 0."""
        amps = np.zeros(layout.total_dim, dtype=np.complex128)
        amps[layout.basis_index(values or {})] = 1.0
        return cls(layout, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def squared_norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def as_tensor(self) -> np.ndarray:
        """Read-only view with one axis per register."""
        return self.amps.reshape(self.layout.dims)


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix; its unitarity error is measured once, at construction."""

    matrix: np.ndarray
    label: str = ""
    unitarity_error: float = field(init=False)

    def __post_init__(self) -> None:
        matrix = _as_complex_array(self.matrix, f"operator {self.label!r}")
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError("Operator", "square matrix", matrix.shape)
        object.__setattr__(self, "matrix", matrix)
        gram = matrix.conj().T @ matrix
        error = float(np.max(np.abs(gram - np.eye(matrix.shape[0])))) if matrix.size else 0.0
        object.__setattr__(self, "unitarity_error", error)
        logger.debug("Built operator %r (dim %d), unitarity error %.2e", self.label, self.dim, error)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def is_unitary(self) -> bool:
        return self.unitarity_error <= UNITARITY_TOLERANCE

    def require_unitary(self) -> None:
        if not self.is_unitary:
            raise NonUnitaryError(self.label, self.unitarity_error, UNITARITY_TOLERANCE)

    @classmethod
    def identity(cls, dim: int, label: str = "I") -> Operator:
        require_dense_capacity(dim)
        return cls(np.eye(dim, dtype=np.complex128), label=label)


def require_dense_capacity(dim: int) -> int:
    """Reject a dense dim×dim operator that would exceed MAX_OPERATOR_DIM."""
    if dim > MAX_OPERATOR_DIM:
        raise CapacityError(dim, MAX_OPERATOR_DIM)
    return dim


def permutation_operator(
    layout: SpaceLayout,
    mapping: Callable[[tuple[int, ...]], tuple[int, ...]],
    label: str = "",
) -> Operator:
    """Operator sending basis |t⟩ to |mapping(t)⟩ over the layout's index tuples.

    The mapping must be a bijection; a non-bijective one fails the unitarity check.
    """
    dim = require_dense_capacity(layout.total_dim)
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    for column in range(dim):
        matrix[layout.to_global(mapping(layout.to_tuple(column))), column] = 1.0
    return Operator(matrix, label=label)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Product state a ⊗ b over the concatenated layout."""
    return StateVector(a.layout.concat(b.layout), np.kron(a.amps, b.amps))


def apply(u: Operator, psi: StateVector) -> StateVector:
    if u.dim != psi.layout.total_dim:
        raise DimensionMismatchError(f"apply({u.label or 'operator'})", psi.layout.total_dim, u.dim)
    u.require_unitary()
    return StateVector(psi.layout, u.matrix @ psi.amps)


def embed(u: Operator, target_registers: Sequence[str], layout: SpaceLayout) -> Operator:
    """Lift a register-local operator to the full layout as u ⊗ I on the other registers.

    The local operator's index order follows target_registers, which need not be
    adjacent or in layout order.
    """
    positions = [layout.position(name) for name in target_registers]
    if len(set(positions)) != len(positions):
        raise RegisterError(",".join(target_registers), "target registers repeat")
    dims = layout.dims
    target_dim = math.prod(dims[i] for i in positions)
    if u.dim != target_dim:
        raise DimensionMismatchError(f"embed onto {list(target_registers)}", target_dim, u.dim)

    require_dense_capacity(layout.total_dim)
    rest = [i for i in range(len(dims)) if i not in positions]
    order = positions + rest
    rest_dim = math.prod(dims[i] for i in rest)
    full = np.kron(u.matrix, np.eye(rest_dim, dtype=np.complex128))

    permuted = [dims[i] for i in order]
    inverse = [order.index(k) for k in range(len(dims))]
    axes = inverse + [len(dims) + a for a in inverse]
    matrix = full.reshape(permuted + permuted).transpose(axes).reshape(layout.total_dim, -1)
    return Operator(matrix, label=u.label)


def adjoint(u: Operator) -> Operator:
    label = u.label[:-1] if u.label.endswith("†") else (f"{u.label}†" if u.label else "")
    return Operator(u.matrix.conj().T, label=label)


def compose(u: Operator, v: Operator) -> Operator:
    """Matrix product u·v: applying the result equals applying v, then u."""
    if u.dim != v.dim:
        raise DimensionMismatchError("compose", u.dim, v.dim)
    label = "·".join(part for part in (u.label, v.label) if part)
    return Operator(u.matrix @ v.matrix, label=label)


def inner(a: StateVector, b: StateVector) -> complex:
    """⟨a|b⟩, conjugate-linear in a."""
    if a.layout.dims != b.layout.dims:
        raise DimensionMismatchError("inner", a.layout.dims, b.layout.dims)
    return complex(np.vdot(a.amps, b.amps))


def normalize(psi: StateVector) -> StateVector:
    norm = psi.norm()
    if norm == 0.0:
        raise EmptyBranchError("normalize")
    return StateVector(psi.layout, psi.amps / norm)
