"""
Observer macrostate bookkeeping: branch decomposition, Born weights, sampling
and projective collapse.

A state over (observer ⊗ rest) is split as Σ_k |O_k⟩|U_k⟩; the squared norm of
|U_k⟩ is the probability for the observer to find itself in macrostate k.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Final, Literal

import numpy as np

from branchsim.core.linalg import SpaceLayout, StateVector
from branchsim.exceptions import (
    AncillaNotFreshError,
    DimensionMismatchError,
    EmptyBranchError,
    ObserverRegisterError,
    RegisterError,
)


logger = logging.getLogger(__name__)

# Squared-norm threshold below which a branch is treated as absent.
PRUNE_THRESHOLD: Final[float] = 1e-15

BranchGroup = Literal["k1", "k2", "k3", "restored"]


@dataclass(frozen=True)
class MacrostateRegister:
    """Labels and flags of the observer's classically describable macrostates.

    `bookkeeping` holds indices (restored successors) that are not part of the
    cycle partition and therefore do not count towards the realized q.
    """

    labels: tuple[str, ...]
    knows_disaster: tuple[bool, ...]
    reset_scheduled: tuple[bool, ...]
    bookkeeping: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.count < 2:
            raise RegisterError("observer", f"need at least 2 macrostates, got {self.count}")
        if len(set(self.labels)) != self.count:
            raise RegisterError("observer", "macrostate labels must be unique")
        if not len(self.knows_disaster) == len(self.reset_scheduled) == self.count:
            raise RegisterError("observer", "one flag of each kind per macrostate")

    @property
    def count(self) -> int:
        return len(self.labels)

    def group_of(self, index: int) -> BranchGroup:
        if index in self.bookkeeping:
            return "restored"
        if self.knows_disaster[index]:
            return "k1"
        if self.reset_scheduled[index]:
            return "k2"
        return "k3"

    def indices(self, group: BranchGroup) -> tuple[int, ...]:
        return tuple(i for i in range(self.count) if self.group_of(i) == group)

    @property
    def realized_q(self) -> float:
        """Fraction of non-disaster cycle macrostates that reset."""
        non_disaster = len(self.indices("k2")) + len(self.indices("k3"))
        if non_disaster == 0:
            return 0.0
        return len(self.indices("k2")) / non_disaster


@dataclass(frozen=True, eq=False)
class Branch:
    macrostate_index: int
    environment_state: StateVector
    weight: float


@dataclass(frozen=True, eq=False)
class BranchDecomposition:
    """Branches of a state with respect to one register, in index order."""

    layout: SpaceLayout
    register: str
    branches: tuple[Branch, ...]
    total_weight: float

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(branch.macrostate_index for branch in self.branches)

    def weight_of(self, index: int) -> float:
        for branch in self.branches:
            if branch.macrostate_index == index:
                return branch.weight
        return 0.0

    def branch(self, index: int) -> Branch:
        for branch in self.branches:
            if branch.macrostate_index == index:
                return branch
        raise EmptyBranchError(f"branch {index} of register '{self.register}'")

    @cached_property
    def cumulative_weights(self) -> np.ndarray:
        return np.cumsum([branch.weight for branch in self.branches])

    def reconstruct(self) -> StateVector:
        """Σ_k |k⟩|U_k⟩ back on the original layout."""
        position = self.layout.position(self.register)
        dim = self.layout.dims[position]
        rest = self.layout.without(self.register)
        block = np.zeros((dim, rest.total_dim), dtype=np.complex128)
        for branch in self.branches:
            block[branch.macrostate_index] = branch.environment_state.amps
        moved = block.reshape((dim,) + rest.dims)
        return StateVector(self.layout, np.moveaxis(moved, 0, position).reshape(-1))


def _register_block(psi: StateVector, register: str) -> tuple[int, np.ndarray]:
    position = psi.layout.position(register)
    dim = psi.layout.dims[position]
    block = np.moveaxis(psi.as_tensor(), position, 0).reshape(dim, -1)
    return position, block


def decompose_register(psi: StateVector, register: str) -> BranchDecomposition:
    """Split psi by the basis value of any register; weights below PRUNE_THRESHOLD are dropped."""
    _, block = _register_block(psi, register)
    rest = psi.layout.without(register)
    branches = []
    for index, row in enumerate(block):
        weight = float(np.vdot(row, row).real)
        if weight < PRUNE_THRESHOLD:
            continue
        branches.append(Branch(index, StateVector(rest, row), weight))
    total = math.fsum(branch.weight for branch in branches)
    return BranchDecomposition(psi.layout, register, tuple(branches), total)


def _observer_name(layout: SpaceLayout) -> str:
    observer = layout.observer
    if observer is None:
        raise ObserverRegisterError(layout.names)
    return observer.name


def decompose(psi: StateVector, layout: SpaceLayout) -> BranchDecomposition:
    """Branches |O_k⟩|U_k⟩ with respect to the observer register (first in layout)."""
    if psi.layout.dims != layout.dims:
        raise DimensionMismatchError("decompose", layout.dims, psi.layout.dims)
    return decompose_register(StateVector(layout, psi.amps), _observer_name(layout))


def born_weights(d: BranchDecomposition) -> list[tuple[int, float]]:
    if d.total_weight <= 0.0:
        raise EmptyBranchError(f"Born weights of register '{d.register}'")
    return [(branch.macrostate_index, branch.weight / d.total_weight) for branch in d.branches]


def sample_macrostate(d: BranchDecomposition, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the retained branches in index order."""
    if d.total_weight <= 0.0:
        raise EmptyBranchError(f"sampling register '{d.register}'")
    cumulative = d.cumulative_weights
    position = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return d.branches[min(position, len(d.branches) - 1)].macrostate_index


def project_onto(psi: StateVector, register: str, value: int) -> StateVector:
    """Normalized projection of psi onto register == value."""
    position, block = _register_block(psi, register)
    if not 0 <= value < block.shape[0]:
        raise DimensionMismatchError(f"project_onto({register})", f"value < {block.shape[0]}", value)
    row = block[value]
    weight = float(np.vdot(row, row).real)
    if weight < PRUNE_THRESHOLD:
        raise EmptyBranchError(f"projection of '{register}' onto {value}")
    projected = np.zeros_like(block)
    projected[value] = row / math.sqrt(weight)
    moved = projected.reshape((block.shape[0],) + psi.layout.without(register).dims)
    return StateVector(psi.layout, np.moveaxis(moved, 0, position).reshape(-1))


def collapse_to(psi: StateVector, macrostate_index: int) -> StateVector:
    """|O_k⟩|U_k⟩/‖U_k‖: the collapse interpretation's post-measurement state."""
    return project_onto(psi, _observer_name(psi.layout), macrostate_index)


def require_fresh(psi: StateVector, register: str, reference: int = 0) -> None:
    """Raise AncillaNotFreshError unless the register sits in its reference basis state."""
    stray = math.fsum(
        branch.weight
        for branch in decompose_register(psi, register).branches
        if branch.macrostate_index != reference
    )
    if stray > PRUNE_THRESHOLD:
        raise AncillaNotFreshError(register, stray)
