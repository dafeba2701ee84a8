"""
Execution of a schedule under the Many-Worlds or the collapse interpretation.

Many-Worlds: operators act unitarily and the global state is never disturbed.
Intermediate readouts record Born weights, terminal readouts sample. In
conditioned mode one observer is followed through the run: before each readout
its present macrostate is drawn from the branch it was followed along (chained
conditional Born weights) and the followed sector is re-anchored on the global
state projected onto that macrostate. This is bookkeeping, not collapse.

Collapse: every readout samples and projects the state onto the outcome.

States reached along a given outcome path are memoized per runner, so repeated
trials cost only the random draws.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, TypeVar

import numpy as np

from branchsim.core.linalg import StateVector, apply
from branchsim.exceptions import DimensionMismatchError, ScheduleError
from branchsim.observer.model import (
    BranchDecomposition,
    born_weights,
    decompose_register,
    project_onto,
    require_fresh,
    sample_macrostate,
)

from .schedule import EraseStep, Interpretation, ReadoutStep, Schedule, Step


logger = logging.getLogger(__name__)

Path = tuple[int, ...]
_T = TypeVar("_T")


@dataclass(frozen=True)
class ReadoutRecord:
    """One readout: the Born weights used and, when sampled, the outcome drawn."""

    label: str
    register: str
    terminal: bool
    distribution: tuple[tuple[int, float], ...]
    outcome: int | None = None
    probability: float | None = None
    macrostate: int | None = None
    macrostate_probability: float | None = None


@dataclass(frozen=True, eq=False)
class ExecutionTrace:
    interpretation: Interpretation
    readouts: tuple[ReadoutRecord, ...]
    final_state: StateVector
    chained_weight: float

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(record.label for record in self.readouts)

    def record(self, label: str) -> ReadoutRecord:
        for record in self.readouts:
            if record.label == label:
                return record
        raise ScheduleError(f"trace has no readout labelled '{label}'")

    def outcome(self, label: str) -> int | None:
        return self.record(label).outcome


@dataclass(frozen=True)
class TraceLeaf:
    """One complete outcome path of a schedule with its exact probability."""

    outcomes: tuple[tuple[str, int | None], ...]
    probability: float

    def outcome(self, label: str) -> int | None:
        for name, value in self.outcomes:
            if name == label:
                return value
        raise ScheduleError(f"leaf has no readout labelled '{label}'")


@dataclass(frozen=True, eq=False)
class _Frame:
    state: StateVector
    view: StateVector | None = None
    followed: int | None = None


@dataclass(frozen=True, eq=False)
class _Distribution:
    decomposition: BranchDecomposition

    @cached_property
    def weights(self) -> tuple[tuple[int, float], ...]:
        return tuple(born_weights(self.decomposition))

    @cached_property
    def lookup(self) -> dict[int, float]:
        return dict(self.weights)


@dataclass(frozen=True, eq=False)
class _Fork:
    probability: float
    record: ReadoutRecord
    path: Path
    frame: _Frame


class ScheduleRunner:
    """Runs one schedule from one initial state under one interpretation."""

    def __init__(
        self,
        schedule: Schedule,
        initial: StateVector,
        interpretation: Interpretation,
        *,
        conditioned: bool = False,
    ):
        if initial.layout.dims != schedule.layout.dims:
            raise DimensionMismatchError("ScheduleRunner", schedule.layout.dims, initial.layout.dims)
        self.schedule = schedule
        self.interpretation = Interpretation(interpretation)
        observer = schedule.layout.observer
        self._observer = observer.name if observer is not None else None
        self.conditioned = (
            conditioned and self.interpretation is Interpretation.MWI and self._observer is not None
        )
        self._initial = _Frame(StateVector(schedule.layout, initial.amps))
        self._frames: dict[tuple, _Frame] = {}
        self._anchors: dict[tuple, StateVector] = {}
        self._distributions: dict[tuple, _Distribution] = {}

    @property
    def initial_state(self) -> StateVector:
        return self._initial.state

    @staticmethod
    def _memo(cache: dict, key: tuple, build: Callable[[], _T]) -> _T:
        value = cache.get(key)
        if value is None:
            value = build()
            cache[key] = value
        return value

    def _distribution(self, key: tuple, state: StateVector, register: str) -> _Distribution:
        return self._memo(
            self._distributions,
            key + (register,),
            lambda: _Distribution(decompose_register(state, register)),
        )

    def _transition(self, index: int, step: Step, path: Path, frame: _Frame) -> _Frame:
        def build() -> _Frame:
            logger.debug("Applying step %d (%s) on path %s", index, step.label, path)
            if isinstance(step, EraseStep):
                require_fresh(frame.state, step.ancilla, step.reference)
            operator = step.operator  # type: ignore[union-attr]
            view = apply(operator, frame.view) if frame.view is not None else None
            return _Frame(apply(operator, frame.state), view, frame.followed)

        return self._memo(self._frames, (index, path), build)

    def _collapsed(self, index: int, path: Path, frame: _Frame, step: ReadoutStep, value: int) -> tuple[Path, _Frame]:
        next_path = path + (value,)
        next_frame = self._memo(
            self._frames,
            (index, next_path),
            lambda: _Frame(project_onto(frame.state, step.register, value)),
        )
        return next_path, next_frame

    def _anchored(self, index: int, path: Path, frame: _Frame, macrostate: int) -> tuple[Path, StateVector]:
        assert self._observer is not None
        observer = self._observer
        anchored_path = path + (macrostate,)
        anchored = self._memo(
            self._anchors,
            (index, anchored_path),
            lambda: project_onto(frame.state, observer, macrostate),
        )
        return anchored_path, anchored

    def _source(self, index: int, path: Path, frame: _Frame) -> _Distribution:
        assert self._observer is not None
        source = frame.view if frame.view is not None else frame.state
        return self._distribution((index, path, "source"), source, self._observer)

    def _forks(self, index: int, step: ReadoutStep, path: Path, frame: _Frame) -> Iterable[_Fork]:
        """Every way this readout can resolve, with its probability."""
        if self.interpretation is Interpretation.COLLAPSE:
            dist = self._distribution((index, path, "state"), frame.state, step.register)
            for value, probability in dist.weights:
                next_path, next_frame = self._collapsed(index, path, frame, step, value)
                record = ReadoutRecord(step.label, step.register, step.terminal, dist.weights, value, probability)
                yield _Fork(probability, record, next_path, next_frame)
            return

        if not self.conditioned:
            dist = self._distribution((index, path, "state"), frame.state, step.register)
            if not step.terminal:
                yield _Fork(1.0, ReadoutRecord(step.label, step.register, False, dist.weights), path, frame)
                return
            for value, probability in dist.weights:
                record = ReadoutRecord(step.label, step.register, True, dist.weights, value, probability)
                yield _Fork(probability, record, path, frame)
            return

        source = self._source(index, path, frame)
        for macrostate, p_macro in source.weights:
            for fork in self._within(index, step, path, frame, macrostate, p_macro, source):
                yield fork

    def _within(
        self,
        index: int,
        step: ReadoutStep,
        path: Path,
        frame: _Frame,
        macrostate: int,
        p_macro: float,
        source: _Distribution,
    ) -> Iterable[_Fork]:
        anchored_path, anchored = self._anchored(index, path, frame, macrostate)
        if step.register == self._observer:
            next_frame = self._memo(
                self._frames,
                (index, anchored_path),
                lambda: _Frame(frame.state, anchored, macrostate),
            )
            record = ReadoutRecord(
                step.label, step.register, step.terminal, source.weights,
                macrostate, p_macro, macrostate, p_macro,
            )
            yield _Fork(p_macro, record, anchored_path, next_frame)
            return
        dist = self._distribution((index, anchored_path, "view"), anchored, step.register)
        for value, probability in dist.weights:
            next_path = anchored_path + (value,)
            next_frame = self._memo(
                self._frames,
                (index, next_path),
                lambda: _Frame(frame.state, project_onto(anchored, step.register, value), macrostate),
            )
            record = ReadoutRecord(
                step.label, step.register, step.terminal, dist.weights,
                value, probability, macrostate, p_macro,
            )
            yield _Fork(p_macro * probability, record, next_path, next_frame)

    def _sample(self, index: int, step: ReadoutStep, path: Path, frame: _Frame, rng: np.random.Generator) -> _Fork:
        if self.interpretation is Interpretation.COLLAPSE:
            dist = self._distribution((index, path, "state"), frame.state, step.register)
            value = sample_macrostate(dist.decomposition, rng)
            next_path, next_frame = self._collapsed(index, path, frame, step, value)
            probability = dist.lookup[value]
            record = ReadoutRecord(step.label, step.register, step.terminal, dist.weights, value, probability)
            return _Fork(probability, record, next_path, next_frame)

        if not self.conditioned:
            dist = self._distribution((index, path, "state"), frame.state, step.register)
            if not step.terminal:
                return _Fork(1.0, ReadoutRecord(step.label, step.register, False, dist.weights), path, frame)
            value = sample_macrostate(dist.decomposition, rng)
            probability = dist.lookup[value]
            record = ReadoutRecord(step.label, step.register, True, dist.weights, value, probability)
            return _Fork(probability, record, path, frame)

        source = self._source(index, path, frame)
        macrostate = sample_macrostate(source.decomposition, rng)
        p_macro = source.lookup[macrostate]
        if step.register == self._observer:
            return next(iter(self._within(index, step, path, frame, macrostate, p_macro, source)))
        anchored_path, anchored = self._anchored(index, path, frame, macrostate)
        dist = self._distribution((index, anchored_path, "view"), anchored, step.register)
        value = sample_macrostate(dist.decomposition, rng)
        for fork in self._within(index, step, path, frame, macrostate, p_macro, source):
            if fork.record.outcome == value:
                return fork
        raise ScheduleError(f"sampled value {value} missing from readout '{step.label}'")

    def run(self, rng: np.random.Generator) -> ExecutionTrace:
        frame = self._initial
        path: Path = ()
        records: list[ReadoutRecord] = []
        weight = 1.0
        for index, step in enumerate(self.schedule.steps):
            if not isinstance(step, ReadoutStep):
                frame = self._transition(index, step, path, frame)
                continue
            fork = self._sample(index, step, path, frame, rng)
            records.append(fork.record)
            weight *= fork.probability
            path, frame = fork.path, fork.frame
        return ExecutionTrace(self.interpretation, tuple(records), frame.state, weight)

    def exact_leaves(self) -> tuple[TraceLeaf, ...]:
        """All outcome paths with their exact probabilities, in outcome order."""
        leaves: list[TraceLeaf] = []
        self._walk(0, (), self._initial, 1.0, (), leaves)
        return tuple(leaves)

    def _walk(
        self,
        start: int,
        path: Path,
        frame: _Frame,
        weight: float,
        outcomes: tuple[tuple[str, int | None], ...],
        leaves: list[TraceLeaf],
    ) -> None:
        steps = self.schedule.steps
        for index in range(start, len(steps)):
            step = steps[index]
            if not isinstance(step, ReadoutStep):
                frame = self._transition(index, step, path, frame)
                continue
            for fork in self._forks(index, step, path, frame):
                self._walk(
                    index + 1,
                    fork.path,
                    fork.frame,
                    weight * fork.probability,
                    outcomes + ((step.label, fork.record.outcome),),
                    leaves,
                )
            return
        leaves.append(TraceLeaf(outcomes, weight))

    def exact_distributions(self) -> dict[str, dict[int, float]]:
        """Exact marginal distribution of every readout.

        Unsampled (Many-Worlds intermediate) readouts report their recorded
        Born weights, which do not depend on the path.
        """
        totals: dict[str, dict[int, float]] = {label: defaultdict(float) for label in self.schedule.readout_labels}
        unsampled: dict[str, tuple[tuple[int, float], ...]] = {}
        self._collect(0, (), self._initial, 1.0, totals, unsampled)
        for label, weights in unsampled.items():
            totals[label] = dict(weights)
        return {label: dict(sorted(values.items())) for label, values in totals.items()}

    def _collect(self, start, path, frame, weight, totals, unsampled) -> None:
        steps = self.schedule.steps
        for index in range(start, len(steps)):
            step = steps[index]
            if not isinstance(step, ReadoutStep):
                frame = self._transition(index, step, path, frame)
                continue
            for fork in self._forks(index, step, path, frame):
                if fork.record.outcome is None:
                    unsampled[step.label] = fork.record.distribution
                else:
                    totals[step.label][fork.record.outcome] += weight * fork.probability
                self._collect(index + 1, fork.path, fork.frame, weight * fork.probability, totals, unsampled)
            return


def execute(
    schedule: Schedule,
    initial: StateVector,
    interpretation: Interpretation,
    rng: np.random.Generator,
    *,
    conditioned: bool = False,
) -> ExecutionTrace:
    return ScheduleRunner(schedule, initial, interpretation, conditioned=conditioned).run(rng)


def empirical_distribution(traces: Iterable[ExecutionTrace], label: str) -> dict[int, float]:
    """Outcome frequencies of one readout; unsampled readouts average their recorded weights."""
    counts: dict[int, float] = defaultdict(float)
    total = 0
    for trace in traces:
        record = trace.record(label)
        total += 1
        if record.outcome is not None:
            counts[record.outcome] += 1.0
        else:
            for value, probability in record.distribution:
                counts[value] += probability
    if total == 0:
        raise ScheduleError("empty trace set")
    return {value: count / total for value, count in sorted(counts.items())}


def statistics_equal(
    traceset_a: list[ExecutionTrace],
    traceset_b: list[ExecutionTrace],
    tolerance: float,
) -> bool:
    """True iff every readout's empirical distribution agrees within tolerance."""
    if not traceset_a or not traceset_b:
        raise ScheduleError("cannot compare empty trace sets")
    shape = traceset_a[0].labels
    for trace in (*traceset_a, *traceset_b):
        if trace.labels != shape:
            raise ScheduleError(f"trace shape {trace.labels} differs from {shape}")
    for label in shape:
        a = empirical_distribution(traceset_a, label)
        b = empirical_distribution(traceset_b, label)
        for value in sorted(set(a) | set(b)):
            if abs(a.get(value, 0.0) - b.get(value, 0.0)) > tolerance:
                logger.info("Readout '%s' value %d differs: %.4f vs %.4f", label, value, a.get(value, 0.0), b.get(value, 0.0))
                return False
    return True
