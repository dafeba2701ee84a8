"""
Self-check driver: every acceptance property of the simulator, reported as
one summary row per check.
"""

from __future__ import annotations

import filecmp
import logging
import math
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Callable, Final

import numpy as np

from branchsim.core.linalg import StateVector, apply
from branchsim.exceptions import UndefinedConditionalError
from branchsim.interpretations.execution import statistics_equal
from branchsim.interpretations.schedule import Interpretation, ReadoutStep
from branchsim.observer.model import decompose
from branchsim.oracle.tree import oracle_p_dis, oracle_p_reset
from branchsim.protocols.closed_form import (
    limit_relative_error,
    p_dis_closed_form,
    p_reset_closed_form,
)
from branchsim.protocols.deutsch import DeutschConfig, DeutschMode, deutsch_runner, run_deutsch
from branchsim.protocols.disaster import (
    DisasterConfig,
    Scenario,
    disaster_given_group,
    disaster_plan,
    exact_cycle_probabilities,
    run_disaster_cycle,
)

from .config import GRID_P, GRID_Q, Experiment, ExperimentConfig, InterpretationChoice
from .experiments import (
    ANY_INTERPRETATION,
    EXACT_TOLERANCE,
    LIMIT_TOLERANCE,
    ExperimentResult,
    SummaryRow,
    run_disaster_experiment,
    write_result,
)
from .seeding import trial_rng
from .stats import Proportion


logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE: Final[float] = 1e-12
STRUCTURE_TOLERANCE: Final[float] = 1e-12
DEUTSCH_TRIALS: Final[int] = 10_000
INDISTINGUISHABLE_TOLERANCE: Final[float] = 0.03
ORACLE_POINTS: Final[int] = 1_000
COVERAGE_TRIALS: Final[int] = 1_000
COVERAGE_QUOTA: Final[float] = 0.93
REPRODUCTION_TRIALS: Final[int] = 200


def _check(metric: str, passed: bool, value: float | None = None, reference: float | None = None,
           interpretation: str = ANY_INTERPRETATION) -> SummaryRow:
    row = SummaryRow(metric, interpretation, value, reference=reference, exact=True, passed=bool(passed))
    logger.info("%s %s: %s", "PASS" if passed else "FAIL", metric, value)
    return row


def _grid() -> list[DisasterConfig]:
    return [DisasterConfig(p, q) for p in GRID_P for q in GRID_Q]


def check_deutsch(seed: int) -> list[SummaryRow]:
    rows = []
    reversible = DeutschConfig(DeutschMode.REVERSIBLE)
    dump = DeutschConfig(DeutschMode.ENVIRONMENT_DUMP)

    mwi = run_deutsch(reversible, Interpretation.MWI)
    rows.append(_check("deutsch reversible exact", abs(mwi - 1.0) <= EXACT_TOLERANCE, mwi, 1.0, "mwi"))

    sampled = run_deutsch(
        replace(reversible, exact=False, trials=DEUTSCH_TRIALS),
        Interpretation.COLLAPSE,
        trial_rng(seed, 0),
    )
    rows.append(_check("deutsch reversible sampled", abs(sampled - 0.5) <= 0.02, sampled, 0.5, "collapse"))

    for interpretation in Interpretation:
        value = run_deutsch(dump, interpretation)
        rows.append(
            _check("deutsch dump exact", abs(value - 0.5) <= EXACT_TOLERANCE, value, 0.5, interpretation.value)
        )

    for mode, expect_equal in ((DeutschMode.ENVIRONMENT_DUMP, True), (DeutschMode.REVERSIBLE, False)):
        traces = {
            interpretation: [
                deutsch_runner(mode, "x", interpretation).run(trial_rng(seed, 1 + offset + i))
                for i in range(DEUTSCH_TRIALS)
            ]
            for offset, interpretation in ((0, Interpretation.MWI), (DEUTSCH_TRIALS, Interpretation.COLLAPSE))
        }
        equal = statistics_equal(
            traces[Interpretation.MWI], traces[Interpretation.COLLAPSE], INDISTINGUISHABLE_TOLERANCE
        )
        name = "dump indistinguishable" if expect_equal else "reversible distinguishable"
        rows.append(_check(name, equal == expect_equal))
    return rows


def check_closed_forms() -> list[SummaryRow]:
    reset_ok = dis_ok = identity_ok = True
    worst = 0.0
    for cfg in _grid():
        exact = exact_cycle_probabilities(cfg)
        closed = p_reset_closed_form(cfg.p, exact.realized_q)
        oracle = oracle_p_reset(cfg.p, exact.realized_q)
        spread = max(closed, oracle, exact.p_reset) - min(closed, oracle, exact.p_reset)
        worst = max(worst, spread)
        reset_ok &= spread <= EXACT_TOLERANCE
        try:
            closed_dis = p_dis_closed_form(cfg.p, exact.realized_q)
        except UndefinedConditionalError:
            dis_ok &= exact.p_dis is None
            continue
        oracle_dis = oracle_p_dis(cfg.p, exact.realized_q)
        quantum_dis = exact.p_dis if exact.p_dis is not None else math.nan
        values = (closed_dis, oracle_dis, quantum_dis)
        dis_ok &= max(values) - min(values) <= EXACT_TOLERANCE
        identity_ok &= abs(p_reset_closed_form(cfg.p, cfg.q) * p_dis_closed_form(cfg.p, cfg.q) - cfg.p) <= IDENTITY_TOLERANCE
        identity_ok &= abs(exact.p_reset * quantum_dis - cfg.p) <= EXACT_TOLERANCE
    return [
        _check("P_reset triple agreement", reset_ok, worst),
        _check("P_dis triple agreement", dis_ok),
        _check("P_reset * P_dis = p", identity_ok),
    ]


def check_oracle_random_grid(seed: int) -> SummaryRow:
    rng = trial_rng(seed, 2)
    worst = 0.0
    for p, q in rng.random((ORACLE_POINTS, 2)):
        p, q = float(p), float(q)
        worst = max(worst, abs(oracle_p_reset(p, q) - p_reset_closed_form(p, q)))
        worst = max(worst, abs(oracle_p_dis(p, q) - p_dis_closed_form(p, q)))
    return _check("oracle vs closed form, random grid", worst <= IDENTITY_TOLERANCE, worst, 0.0)


def check_limit() -> SummaryRow:
    error = limit_relative_error(0.001, 0.2)
    return _check("limit p=0.001 q=0.2", error <= LIMIT_TOLERANCE, error, LIMIT_TOLERANCE)


def check_correlated_backup() -> list[SummaryRow]:
    correlated = disaster_given_group(DisasterConfig(0.2, 0.5, Scenario.CORRELATED))
    k1, k2 = correlated.get("k1", math.nan), correlated.get("k2", math.nan)
    uncorrelated = exact_cycle_probabilities(DisasterConfig(0.2, 0.5))
    spread = max(abs(v - (uncorrelated.p_dis or math.nan)) for v in uncorrelated.disaster_given_group.values())
    return [
        _check("correlated P(disaster|k1) = 1", abs(k1 - 1.0) <= IDENTITY_TOLERANCE, k1, 1.0, "mwi"),
        _check("correlated P(disaster|k2) = 0", abs(k2) <= IDENTITY_TOLERANCE, k2, 0.0, "mwi"),
        _check("uncorrelated post-reset outcome not predetermined", spread <= EXACT_TOLERANCE, spread, 0.0, "mwi"),
    ]


def check_structure(seed: int) -> list[SummaryRow]:
    """Unitarity, normalization, round trips and erasure concentration."""
    schedules = [deutsch_runner(mode, "x", Interpretation.MWI).schedule for mode in DeutschMode]
    initial = [deutsch_runner(mode, "x", Interpretation.MWI).initial_state for mode in DeutschMode]
    concentration = True
    for cfg in _grid() + [DisasterConfig(0.2, 0.5, Scenario.CORRELATED)]:
        plan = disaster_plan(cfg)
        schedules.append(plan.schedule)
        initial.append(plan.initial_state)
        erased = apply(plan.erasure, apply(plan.cycle, plan.initial_state))
        weights = decompose(erased, plan.layout)
        m = plan.partition.macrostate_count
        restored = weights.weight_of(m) + weights.weight_of(m + 1)
        exact = exact_cycle_probabilities(cfg)
        stray = sum(weights.weight_of(k) for group in ("k1", "k2") for k in plan.register.indices(group))
        concentration &= abs(restored - exact.p_reset) <= STRUCTURE_TOLERANCE and stray <= STRUCTURE_TOLERANCE

    worst_unitary = max(op.unitarity_error for schedule in schedules for op in schedule.operators)
    worst_norm = 0.0
    worst_round_trip = 0.0
    rng = trial_rng(seed, 3)
    for schedule, state in zip(schedules, initial):
        for step in schedule.steps:
            if isinstance(step, ReadoutStep):
                continue
            state = apply(step.operator, state)
            worst_norm = max(worst_norm, abs(state.norm() - 1.0))
            rebuilt = decompose(state, schedule.layout).reconstruct()
            worst_round_trip = max(worst_round_trip, float(np.max(np.abs(rebuilt.amps - state.amps))))
        noise = rng.normal(size=(2, schedule.layout.total_dim))
        random_state = StateVector(schedule.layout, noise[0] + 1j * noise[1])
        rebuilt = decompose(random_state, schedule.layout).reconstruct()
        worst_round_trip = max(worst_round_trip, float(np.max(np.abs(rebuilt.amps - random_state.amps))))

    return [
        _check("unitarity of built operators", worst_unitary <= 1e-10, worst_unitary, 0.0),
        _check("normalization after apply", worst_norm <= STRUCTURE_TOLERANCE, worst_norm, 0.0),
        _check("decompose/reconstruct round trip", worst_round_trip <= STRUCTURE_TOLERANCE, worst_round_trip, 0.0),
        _check("erasure concentrates the observer", concentration),
    ]


def check_monte_carlo(cfg: ExperimentConfig) -> list[SummaryRow]:
    mc_cfg = replace(
        cfg,
        experiment=Experiment.DISASTER,
        p=0.01,
        q=0.1,
        scenario=Scenario.UNCORRELATED,
        interpretation=InterpretationChoice.BOTH,
        macrostate_count=None,
        backup_index=None,
        out=None,
    )
    result = run_disaster_experiment(mc_cfg)
    return [
        replace(row, metric=f"monte carlo {row.metric} p=0.01 q=0.1")
        for row in result.summary
        if row.metric in ("P_reset", "P_dis")
    ]


def check_coverage(cfg: ExperimentConfig) -> SummaryRow:
    covered = checked = 0
    for cell, dcfg in enumerate(_grid()):
        exact = exact_cycle_probabilities(dcfg)
        for offset, interpretation in enumerate(Interpretation):
            outcomes = [
                run_disaster_cycle(dcfg, interpretation, trial_rng(cfg.seed ^ (cell * 2 + offset + 1), i))
                for i in range(COVERAGE_TRIALS)
            ]
            resets = [o for o in outcomes if o.reset_occurred]
            checked += 1
            covered += Proportion(len(resets), len(outcomes), cfg.confidence).contains(exact.p_reset)
            if resets and exact.p_dis is not None:
                hits = sum(1 for o in resets if o.disaster_after_reset)
                checked += 1
                covered += Proportion(hits, len(resets), cfg.confidence).contains(exact.p_dis)
    share = covered / checked
    return _check("Wilson interval coverage", share >= COVERAGE_QUOTA, share, COVERAGE_QUOTA)


def check_reproduction(cfg: ExperimentConfig) -> SummaryRow:
    """Two runs with the same seed must write byte-identical CSV files."""
    with tempfile.TemporaryDirectory() as tmp:
        paths = [Path(tmp) / f"run{i}.csv" for i in (1, 2)]
        for path in paths:
            run_cfg = replace(
                cfg,
                experiment=Experiment.DISASTER,
                p=0.2,
                q=0.5,
                trials=REPRODUCTION_TRIALS,
                interpretation=InterpretationChoice.BOTH,
                out=path,
            )
            write_result(run_disaster_experiment(run_cfg))
        identical = filecmp.cmp(paths[0], paths[1], shallow=False)
    return _check("bit-identical CSV reproduction", identical)


def run_verify(cfg: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult(cfg, ())
    steps: list[Callable[[], list[SummaryRow] | SummaryRow]] = [
        lambda: check_deutsch(cfg.seed),
        check_closed_forms,
        lambda: check_oracle_random_grid(cfg.seed),
        check_limit,
        check_correlated_backup,
        lambda: check_structure(cfg.seed),
        lambda: check_monte_carlo(cfg),
        lambda: check_coverage(cfg),
        lambda: check_reproduction(cfg),
    ]
    for step in steps:
        rows = step()
        result.summary.extend(rows if isinstance(rows, list) else [rows])
    write_result(result)
    return result
