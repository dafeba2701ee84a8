"""Deutsch's test, the disaster/reset cycle and their closed forms."""

from .closed_form import (
    check_probability,
    limit_relative_error,
    p_dis_closed_form,
    p_dis_limit,
    p_reset_closed_form,
    p_reset_limit,
)
from .deutsch import (
    DeutschConfig,
    DeutschMode,
    DeutschOutcome,
    build_dump_unitary,
    build_measurement_unitary,
    build_reversal_unitary,
    deutsch_initial_state,
    deutsch_layout,
    deutsch_schedule,
    exact_deutsch_distribution,
    run_deutsch,
    run_deutsch_trial,
)
from .disaster import (
    CycleOutcome,
    CycleProbabilities,
    DisasterConfig,
    DisasterPlan,
    MacrostatePartition,
    Scenario,
    build_cycle_unitary,
    build_erasure_unitary,
    disaster_layout,
    disaster_given_group,
    disaster_plan,
    exact_cycle_probabilities,
    plan_partition,
    run_disaster_cycle,
)

__all__ = [
    "CycleOutcome",
    "CycleProbabilities",
    "DeutschConfig",
    "DeutschMode",
    "DeutschOutcome",
    "DisasterConfig",
    "DisasterPlan",
    "MacrostatePartition",
    "Scenario",
    "build_cycle_unitary",
    "build_dump_unitary",
    "build_erasure_unitary",
    "build_measurement_unitary",
    "build_reversal_unitary",
    "check_probability",
    "deutsch_initial_state",
    "deutsch_layout",
    "deutsch_schedule",
    "disaster_layout",
    "disaster_given_group",
    "disaster_plan",
    "exact_cycle_probabilities",
    "exact_deutsch_distribution",
    "limit_relative_error",
    "p_dis_closed_form",
    "p_dis_limit",
    "p_reset_closed_form",
    "p_reset_limit",
    "plan_partition",
    "run_deutsch",
    "run_deutsch_trial",
    "run_disaster_cycle",
]
