"""
Backup, branching cycle and memory erasure for the disaster/reset protocol.

Layout: observer ⊗ disaster ⊗ workspace ⊗ dump.

  observer   M cycle macrostates (k1 first, then k2, then k3) followed by two
             bookkeeping successors: "restored" and "restored_disaster".
  disaster   0 = no disaster, 1 = disaster.
  workspace  0 before the cycle, 1 after; keeps the cycle map injective.
  dump       fresh ancilla (0 = blank) that receives the erased macrostate as k + 1.

The cycle maps the backup |O_j, 0, 0⟩ onto uniform superpositions within each
group with group weights p, (1 - p) q and (1 - p)(1 - q). Erasure moves every k1
and k2 macrostate into the dump and sets the observer to its restored successor;
k3 is left alone.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from functools import cached_property, lru_cache
from types import MappingProxyType
from typing import Final

import numpy as np

from branchsim.core.linalg import (
    Operator,
    Register,
    SpaceLayout,
    StateVector,
    apply,
    embed,
    permutation_operator,
)
from branchsim.exceptions import (
    DimensionMismatchError,
    OutcomeInvariantError,
    PartitionError,
)
from branchsim.interpretations.execution import ExecutionTrace, ScheduleRunner
from branchsim.interpretations.schedule import (
    ApplyStep,
    EraseStep,
    Interpretation,
    ReadoutStep,
    Schedule,
)
from branchsim.observer.model import (
    PRUNE_THRESHOLD,
    BranchGroup,
    MacrostateRegister,
    decompose,
)

from .closed_form import check_probability


logger = logging.getLogger(__name__)

OBSERVER = "observer"
DISASTER = "disaster"
WORKSPACE = "workspace"
DUMP = "dump"

# Largest denominator tried when q is rounded to a macrostate ratio.
AUTO_MAX_DENOMINATOR: Final[int] = 16
REALIZED_Q_TOLERANCE: Final[float] = 1e-12


class Scenario(StrEnum):
    UNCORRELATED = "uncorrelated"
    CORRELATED = "correlated"

    @classmethod
    def _missing_(cls, value: object) -> Scenario | None:
        if value == "correlated_backup":
            return cls.CORRELATED
        return None


@dataclass(frozen=True)
class DisasterConfig:
    """One cycle of the protocol.

    macrostate_count None selects the smallest count realizing q as a ratio with
    denominator at most AUTO_MAX_DENOMINATOR; backup_index None selects M - 1.
    """

    p: float
    q: float
    scenario: Scenario = Scenario.UNCORRELATED
    macrostate_count: int | None = None
    backup_index: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", check_probability("p", float(self.p)))
        object.__setattr__(self, "q", check_probability("q", float(self.q)))
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.macrostate_count is not None and self.macrostate_count < 2:
            raise PartitionError(f"macrostate_count must be >= 2, got {self.macrostate_count}")


@dataclass(frozen=True)
class MacrostatePartition:
    disaster_count: int
    reset_count: int
    keep_count: int

    @property
    def macrostate_count(self) -> int:
        return self.disaster_count + self.reset_count + self.keep_count

    @property
    def realized_q(self) -> float:
        return self.reset_count / (self.reset_count + self.keep_count)

    def group_range(self, group: BranchGroup) -> range:
        k1, k2 = self.disaster_count, self.disaster_count + self.reset_count
        bounds = {"k1": (0, k1), "k2": (k1, k2), "k3": (k2, self.macrostate_count)}
        start, stop = bounds.get(group, (0, 0))
        return range(start, stop)


def plan_partition(q: float, macrostate_count: int | None = None) -> MacrostatePartition:
    """Split M macrostates into k1/k2/k3 so that |k2| / (|k2| + |k3|) is close to q."""
    if macrostate_count is None:
        ratio = Fraction(q).limit_denominator(AUTO_MAX_DENOMINATOR)
        partition = MacrostatePartition(1, ratio.numerator, ratio.denominator - ratio.numerator)
    else:
        if macrostate_count < 2:
            raise PartitionError(f"macrostate_count must be >= 2, got {macrostate_count}")
        best: MacrostatePartition | None = None
        best_error = math.inf
        for disaster_count in range(1, macrostate_count):
            non_disaster = macrostate_count - disaster_count
            reset_count = round(q * non_disaster)
            error = abs(reset_count / non_disaster - q)
            if error < best_error:
                best_error = error
                best = MacrostatePartition(disaster_count, reset_count, non_disaster - reset_count)
        assert best is not None
        partition = best
    if abs(partition.realized_q - q) > REALIZED_Q_TOLERANCE:
        logger.warning(
            "Requested q=%r realized as %r with %d macrostates",
            q,
            partition.realized_q,
            partition.macrostate_count,
        )
    return partition


def macrostate_register(partition: MacrostatePartition, scenario: Scenario | str) -> MacrostateRegister:
    labels: list[str] = []
    knows: list[bool] = []
    resets: list[bool] = []
    for group in ("k1", "k2", "k3"):
        for offset, _ in enumerate(partition.group_range(group)):
            labels.append(f"{group}:{offset}")
            knows.append(group == "k1")
            resets.append(group != "k3")
    m = partition.macrostate_count
    labels += ["restored", "restored_disaster"]
    knows += [False, Scenario(scenario) is Scenario.CORRELATED]
    resets += [False, False]
    return MacrostateRegister(tuple(labels), tuple(knows), tuple(resets), frozenset({m, m + 1}))


def disaster_layout(partition: MacrostatePartition) -> SpaceLayout:
    m = partition.macrostate_count
    return SpaceLayout.of(
        Register(OBSERVER, m + 2, "observer"),
        Register(DISASTER, 2),
        Register(WORKSPACE, 2),
        Register(DUMP, m + 1, "ancilla"),
    )


def _resolve(cfg: DisasterConfig) -> tuple[MacrostatePartition, int]:
    partition = plan_partition(cfg.q, cfg.macrostate_count)
    m = partition.macrostate_count
    backup = m - 1 if cfg.backup_index is None else cfg.backup_index
    if not 0 <= backup < m:
        raise PartitionError(f"backup_index {backup} must lie in [0, {m})")
    return partition, backup


def _check_layout(layout: SpaceLayout, partition: MacrostatePartition) -> None:
    expected = disaster_layout(partition)
    for name in (OBSERVER, DISASTER, WORKSPACE):
        if layout.register(name).dim != expected.register(name).dim:
            raise DimensionMismatchError(
                f"register '{name}'", expected.register(name).dim, layout.register(name).dim
            )


def build_cycle_unitary(cfg: DisasterConfig, layout: SpaceLayout) -> Operator:
    """Householder reflection sending the backup |O_j, 0, 0⟩ to the branched cycle state."""
    partition, backup = _resolve(cfg)
    _check_layout(layout, partition)
    local = SpaceLayout(tuple(layout.register(name) for name in (OBSERVER, DISASTER, WORKSPACE)))

    q_r = partition.realized_q
    group_weights = {"k1": cfg.p, "k2": (1.0 - cfg.p) * q_r, "k3": (1.0 - cfg.p) * (1.0 - q_r)}
    target = np.zeros(local.total_dim)
    for group, weight in group_weights.items():
        members = partition.group_range(group)
        if not members or weight == 0.0:
            continue
        amplitude = math.sqrt(weight / len(members))
        knows = 1 if group == "k1" else 0
        for k in members:
            target[local.to_global((k, knows, 1))] = amplitude

    source = np.zeros(local.total_dim)
    source[local.to_global((backup, 0, 0))] = 1.0
    w = (source - target) / math.sqrt(2.0)
    reflection = np.eye(local.total_dim) - 2.0 * np.outer(w, w)
    return embed(Operator(reflection, label="cycle"), (OBSERVER, DISASTER, WORKSPACE), layout)


def build_erasure_unitary(cfg: DisasterConfig, layout: SpaceLayout) -> Operator:
    """Swap |k, blank⟩ with |restored successor, k + 1⟩ for every k in k1 ∪ k2."""
    partition, _ = _resolve(cfg)
    _check_layout(layout, partition)
    m = partition.macrostate_count
    if layout.register(DUMP).dim < m + 1:
        raise DimensionMismatchError("dump ancilla", f">= {m + 1}", layout.register(DUMP).dim)
    restored, restored_disaster = m, m + 1

    swaps: dict[tuple[int, int], tuple[int, int]] = {}
    for group in ("k1", "k2"):
        successor = (
            restored_disaster
            if group == "k1" and cfg.scenario is Scenario.CORRELATED
            else restored
        )
        for k in partition.group_range(group):
            swaps[(k, 0)] = (successor, k + 1)
            swaps[(successor, k + 1)] = (k, 0)

    local = SpaceLayout(tuple(layout.register(name) for name in (OBSERVER, DUMP)))
    u = permutation_operator(local, lambda t: swaps.get((t[0], t[1]), t), label="erase")
    return embed(u, (OBSERVER, DUMP), layout)


@dataclass(frozen=True, eq=False)
class DisasterPlan:
    """Everything a cycle needs, built once per configuration."""

    cfg: DisasterConfig
    partition: MacrostatePartition
    backup_index: int
    register: MacrostateRegister
    layout: SpaceLayout
    cycle: Operator
    erasure: Operator

    @property
    def initial_state(self) -> StateVector:
        return StateVector.basis(self.layout, {OBSERVER: self.backup_index})

    @cached_property
    def schedule(self) -> Schedule:
        return Schedule(
            self.layout,
            (
                ApplyStep(self.cycle, "cycle"),
                ReadoutStep(OBSERVER, "branch"),
                EraseStep(self.erasure, DUMP, label="erase"),
                ReadoutStep(OBSERVER, "after_reset"),
                ReadoutStep(DISASTER, "disaster", terminal=True),
            ),
        )


@lru_cache(maxsize=64)
def disaster_plan(cfg: DisasterConfig) -> DisasterPlan:
    partition, backup = _resolve(cfg)
    layout = disaster_layout(partition)
    logger.debug("Building disaster plan for %s on %d states", cfg, layout.total_dim)
    return DisasterPlan(
        cfg=cfg,
        partition=partition,
        backup_index=backup,
        register=macrostate_register(partition, cfg.scenario),
        layout=layout,
        cycle=build_cycle_unitary(cfg, layout),
        erasure=build_erasure_unitary(cfg, layout),
    )


@lru_cache(maxsize=128)
def disaster_runner(cfg: DisasterConfig, interpretation: Interpretation) -> ScheduleRunner:
    plan = disaster_plan(cfg)
    return ScheduleRunner(plan.schedule, plan.initial_state, interpretation, conditioned=True)


@dataclass(frozen=True)
class CycleOutcome:
    reset_occurred: bool
    disaster_after_reset: bool | None
    branch_group: BranchGroup

    def __post_init__(self) -> None:
        if self.reset_occurred != (self.disaster_after_reset is not None):
            raise OutcomeInvariantError(self.reset_occurred, self.disaster_after_reset)


def cycle_outcome(plan: DisasterPlan, trace: ExecutionTrace) -> CycleOutcome:
    branch = trace.outcome("branch")
    assert branch is not None
    group = plan.register.group_of(branch)
    reset = group in ("k1", "k2")
    disaster = trace.outcome("disaster") == 1 if reset else None
    return CycleOutcome(reset, disaster, group)


def run_disaster_cycle(
    cfg: DisasterConfig,
    interpretation: Interpretation | str,
    rng: np.random.Generator,
) -> CycleOutcome:
    """One cycle: backup, branching, readout, erasure on reset branches, disaster readout.

    Many-Worlds runs follow one observer as a conditioned trace.
    """
    plan = disaster_plan(cfg)
    trace = disaster_runner(cfg, Interpretation(interpretation)).run(rng)
    return cycle_outcome(plan, trace)


@dataclass(frozen=True)
class CycleProbabilities:
    """Exact branch-weight probabilities of one cycle."""

    requested_q: float
    realized_q: float
    group_weights: Mapping[str, float]
    p_reset: float
    p_dis: float | None
    restored_weight: float
    disaster_given_group: Mapping[str, float] = field(default_factory=lambda: MappingProxyType({}))


@lru_cache(maxsize=128)
def disaster_given_group(
    cfg: DisasterConfig, interpretation: Interpretation = Interpretation.MWI
) -> Mapping[str, float]:
    """Exact P(disaster after reset | branch group) for a followed observer.

    Groups of zero weight are omitted. The mapping is read-only since it is cached.
    """
    plan = disaster_plan(cfg)
    totals: dict[str, list[float]] = {}
    for leaf in disaster_runner(cfg, Interpretation(interpretation)).exact_leaves():
        branch = leaf.outcome("branch")
        assert branch is not None
        group = plan.register.group_of(branch)
        if group == "k3":
            continue
        bucket = totals.setdefault(group, [0.0, 0.0])
        bucket[1] += leaf.probability
        if leaf.outcome("disaster") == 1:
            bucket[0] += leaf.probability
    return MappingProxyType(
        {group: hit / mass for group, (hit, mass) in sorted(totals.items()) if mass > 0.0}
    )


@lru_cache(maxsize=64)
def exact_cycle_probabilities(cfg: DisasterConfig) -> CycleProbabilities:
    plan = disaster_plan(cfg)
    branched = apply(plan.cycle, plan.initial_state)
    weights = {"k1": 0.0, "k2": 0.0, "k3": 0.0}
    for branch in decompose(branched, plan.layout).branches:
        weights[plan.register.group_of(branch.macrostate_index)] += branch.weight

    erased = apply(plan.erasure, branched)
    m = plan.partition.macrostate_count
    probabilities = np.abs(erased.as_tensor()) ** 2
    restored = probabilities[m : m + 2]
    restored_weight = math.fsum(restored.ravel())
    disaster_weight = math.fsum(restored[:, 1].ravel())
    p_dis = disaster_weight / restored_weight if restored_weight > PRUNE_THRESHOLD else None

    return CycleProbabilities(
        requested_q=cfg.q,
        realized_q=plan.partition.realized_q,
        group_weights=MappingProxyType(weights),
        p_reset=restored_weight,
        p_dis=p_dis,
        restored_weight=restored_weight,
        disaster_given_group=disaster_given_group(cfg),
    )
