"""
Circuit schedules shared by both interpretations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum

from branchsim.core.linalg import Operator, SpaceLayout
from branchsim.exceptions import DimensionMismatchError, ScheduleError


class Interpretation(StrEnum):
    MWI = "mwi"
    COLLAPSE = "collapse"


@dataclass(frozen=True, eq=False)
class ApplyStep:
    operator: Operator
    label: str = ""


@dataclass(frozen=True, eq=False)
class EraseStep:
    """Unitary dump of a record into a fresh ancilla register."""

    operator: Operator
    ancilla: str
    reference: int = 0
    label: str = ""


@dataclass(frozen=True)
class ReadoutStep:
    register: str
    label: str
    terminal: bool = False


Step = ApplyStep | EraseStep | ReadoutStep


@dataclass(frozen=True, eq=False)
class Schedule:
    layout: SpaceLayout
    steps: tuple[Step, ...]

    def __post_init__(self) -> None:
        labels: set[str] = set()
        for step in self.steps:
            if isinstance(step, ReadoutStep):
                self.layout.position(step.register)
                if step.label in labels:
                    raise ScheduleError(f"readout label '{step.label}' is used twice")
                labels.add(step.label)
                continue
            if step.operator.dim != self.layout.total_dim:
                raise DimensionMismatchError(
                    f"schedule step {step.label or step.operator.label!r}",
                    self.layout.total_dim,
                    step.operator.dim,
                )
            if isinstance(step, EraseStep):
                self.layout.position(step.ancilla)

    @property
    def readouts(self) -> tuple[ReadoutStep, ...]:
        return tuple(step for step in self.steps if isinstance(step, ReadoutStep))

    @property
    def readout_labels(self) -> tuple[str, ...]:
        return tuple(step.label for step in self.readouts)

    @property
    def operators(self) -> tuple[Operator, ...]:
        return tuple(step.operator for step in self.steps if not isinstance(step, ReadoutStep))
