"""
Deutsch's test: an observer measures a z-spin prepared along +x, then the
measurement is either undone unitarily or its record is dumped into the
environment, and finally the spin is measured along x.

Registers: memory (observer; 0 = unmeasured, 1 = saw up, 2 = saw down),
spin (0 = up, 1 = down) and, in dump mode, a fresh dump ancilla.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from functools import lru_cache
from typing import Literal

import numpy as np

from branchsim.core.linalg import (
    Operator,
    Register,
    SpaceLayout,
    StateVector,
    adjoint,
    embed,
    permutation_operator,
)
from branchsim.exceptions import ConfigurationError, RegisterError
from branchsim.interpretations.execution import ExecutionTrace, ScheduleRunner
from branchsim.interpretations.schedule import (
    ApplyStep,
    EraseStep,
    Interpretation,
    ReadoutStep,
    Schedule,
    Step,
)


logger = logging.getLogger(__name__)

MEMORY = "memory"
SPIN = "spin"
DUMP = "dump"

UNMEASURED, SAW_UP, SAW_DOWN = 0, 1, 2
SPIN_UP = 0

FinalBasis = Literal["x", "z"]

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


class DeutschMode(StrEnum):
    REVERSIBLE = "reversible"
    ENVIRONMENT_DUMP = "dump"

    @classmethod
    def _missing_(cls, value: object) -> DeutschMode | None:
        if value == "environment_dump":
            return cls.ENVIRONMENT_DUMP
        return None


@dataclass(frozen=True)
class DeutschConfig:
    mode: DeutschMode = DeutschMode.REVERSIBLE
    final_basis: FinalBasis = "x"
    exact: bool = True
    trials: int = 10_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", DeutschMode(self.mode))
        if self.final_basis not in ("x", "z"):
            raise ConfigurationError("final_basis", "x or z")
        if self.trials < 1:
            raise ConfigurationError("trials", "a positive integer")


@dataclass(frozen=True)
class DeutschOutcome:
    """One trial: what the observer's memory read (if sampled) and the final spin."""

    memory: int | None
    x_up: bool
    chained_weight: float


def deutsch_layout(mode: DeutschMode | str, memory_dim: int = 3) -> SpaceLayout:
    registers = [Register(MEMORY, memory_dim, "observer"), Register(SPIN, 2)]
    if DeutschMode(mode) is DeutschMode.ENVIRONMENT_DUMP:
        registers.append(Register(DUMP, memory_dim, "ancilla"))
    return SpaceLayout(tuple(registers))


def _require(layout: SpaceLayout, name: str, min_dim: int, exact: bool = False) -> int:
    dim = layout.register(name).dim
    if dim < min_dim or (exact and dim != min_dim):
        expected = f"dim {min_dim}" if exact else f"dim >= {min_dim}"
        raise RegisterError(name, f"needs {expected}, got {dim}")
    return dim


def build_measurement_unitary(layout: SpaceLayout) -> Operator:
    """Controlled copy of the spin's z value into memory: |m, s⟩ → |m + s + 1, s⟩."""
    memory_dim = _require(layout, MEMORY, 3)
    _require(layout, SPIN, 2, exact=True)
    local = SpaceLayout.of(Register(MEMORY, memory_dim), Register(SPIN, 2))
    u = permutation_operator(
        local, lambda t: ((t[0] + t[1] + 1) % memory_dim, t[1]), label="measure"
    )
    return embed(u, (MEMORY, SPIN), layout)


def build_reversal_unitary(layout: SpaceLayout) -> Operator:
    return adjoint(build_measurement_unitary(layout))


def build_dump_unitary(layout: SpaceLayout) -> Operator:
    """Copy memory into the dump ancilla, then reset memory to unmeasured.

    |m, a⟩ → |m - a', a'⟩ with a' = a + m; on a fresh ancilla this is |m, 0⟩ → |0, m⟩.
    """
    memory_dim = _require(layout, MEMORY, 3)
    dump_dim = _require(layout, DUMP, memory_dim, exact=True)
    local = SpaceLayout.of(Register(MEMORY, memory_dim), Register(DUMP, dump_dim))

    def mapping(t: tuple[int, ...]) -> tuple[int, ...]:
        record = (t[1] + t[0]) % dump_dim
        return ((t[0] - record) % memory_dim, record)

    return embed(permutation_operator(local, mapping, label="dump"), (MEMORY, DUMP), layout)


def deutsch_initial_state(layout: SpaceLayout) -> StateVector:
    """|unmeasured⟩ ⊗ |+x⟩ ⊗ |fresh ancilla⟩."""
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    for spin in (0, 1):
        amps[layout.basis_index({MEMORY: UNMEASURED, SPIN: spin})] = 1.0 / math.sqrt(2.0)
    return StateVector(layout, amps)


def deutsch_schedule(mode: DeutschMode | str, final_basis: FinalBasis = "x") -> Schedule:
    mode = DeutschMode(mode)
    layout = deutsch_layout(mode)
    steps: list[Step] = [
        ApplyStep(build_measurement_unitary(layout), "measure"),
        ReadoutStep(MEMORY, "memory"),
    ]
    if mode is DeutschMode.REVERSIBLE:
        steps.append(ApplyStep(build_reversal_unitary(layout), "reverse"))
    else:
        steps.append(EraseStep(build_dump_unitary(layout), DUMP, label="dump"))
    if final_basis == "x":
        steps.append(ApplyStep(embed(Operator(_HADAMARD, "H"), (SPIN,), layout), "rotate"))
    steps.append(ReadoutStep(SPIN, "spin", terminal=True))
    return Schedule(layout, tuple(steps))


@lru_cache(maxsize=None)
def deutsch_runner(
    mode: DeutschMode, final_basis: FinalBasis, interpretation: Interpretation
) -> ScheduleRunner:
    schedule = deutsch_schedule(mode, final_basis)
    logger.debug("Built Deutsch runner: mode=%s basis=%s %s", mode, final_basis, interpretation)
    return ScheduleRunner(
        schedule,
        deutsch_initial_state(schedule.layout),
        interpretation,
        conditioned=True,
    )


def _runner(config: DeutschConfig, interpretation: Interpretation | str) -> ScheduleRunner:
    return deutsch_runner(config.mode, config.final_basis, Interpretation(interpretation))


def deutsch_outcome(trace: ExecutionTrace) -> DeutschOutcome:
    return DeutschOutcome(
        memory=trace.outcome("memory"),
        x_up=trace.outcome("spin") == SPIN_UP,
        chained_weight=trace.chained_weight,
    )


def run_deutsch_trial(
    config: DeutschConfig,
    interpretation: Interpretation | str,
    rng: np.random.Generator,
) -> DeutschOutcome:
    return deutsch_outcome(_runner(config, interpretation).run(rng))


def exact_deutsch_distribution(
    config: DeutschConfig, interpretation: Interpretation | str
) -> dict[str, dict[int, float]]:
    return _runner(config, interpretation).exact_distributions()


def run_deutsch(
    config: DeutschConfig,
    interpretation: Interpretation | str,
    rng: np.random.Generator | None = None,
) -> float:
    """Probability of spin up in the final basis (x-up for the default basis).

    Exact mode sums the outcome tree; otherwise `config.trials` trials are sampled.
    """
    if config.exact:
        return exact_deutsch_distribution(config, interpretation)["spin"].get(SPIN_UP, 0.0)
    if rng is None:
        raise ConfigurationError("rng", "a numpy Generator for sampled mode")
    runner = _runner(config, interpretation)
    ups = sum(runner.run(rng).outcome("spin") == SPIN_UP for _ in range(config.trials))
    return ups / config.trials
