import logging
from collections.abc import Mapping

import numpy as np
import pytest
from numpy.testing import assert_allclose
from typeguard import TypeCheckError

from branchsim.core import MAX_OPERATOR_DIM, StateVector, apply
from branchsim.exceptions import (
    AncillaNotFreshError,
    BranchSimError,
    CapacityError,
    OutcomeInvariantError,
    PartitionError,
    ProbabilityRangeError,
    UndefinedConditionalError,
)
from branchsim.interpretations import Interpretation, ScheduleRunner
from branchsim.observer import decompose, decompose_register
from branchsim.protocols import (
    CycleOutcome,
    DisasterConfig,
    Scenario,
    disaster_given_group,
    disaster_plan,
    exact_cycle_probabilities,
    limit_relative_error,
    p_dis_closed_form,
    p_dis_limit,
    p_reset_closed_form,
    p_reset_limit,
    plan_partition,
    run_disaster_cycle,
)

GRID = [(p, q) for p in (0, 0.01, 0.1, 0.2, 0.5, 0.9, 1) for q in (0, 0.1, 0.25, 0.5, 1)]


def group_weights(cfg: DisasterConfig) -> Mapping[str, float]:
    return exact_cycle_probabilities(cfg).group_weights


class TestClosedForms:
    @pytest.mark.parametrize("q", [0.0, 0.3, 1.0])
    def test_degenerate_reset(self, q):
        assert p_reset_closed_form(0.0, q) == pytest.approx(q)
        assert p_reset_closed_form(1.0, q) == 1.0

    def test_reference_values(self):
        assert p_reset_closed_form(0.01, 0.1) == pytest.approx(0.109, abs=1e-15)
        assert p_dis_closed_form(0.01, 0.1) == pytest.approx(0.01 / 0.109, abs=1e-15)
        assert p_dis_closed_form(0.3, 0.0) == 1.0
        assert p_dis_closed_form(0.0, 0.4) == 0.0

    def test_undefined_conditional(self):
        with pytest.raises(UndefinedConditionalError):
            p_dis_closed_form(0.0, 0.0)

    @pytest.mark.parametrize(("p", "q"), [(-0.1, 0.5), (0.5, 1.5), (float("nan"), 0.5)])
    def test_out_of_range(self, p, q):
        with pytest.raises(ProbabilityRangeError):
            p_reset_closed_form(p, q)

    def test_rejects_strings(self):
        with pytest.raises(TypeCheckError):
            p_reset_closed_form("0.1", 0.2)  # type: ignore[arg-type]

    def test_identity_reset_times_dis_is_p(self, rng):
        for p, q in rng.random((500, 2)):
            p, q = float(p), float(q)
            assert p_reset_closed_form(p, q) * p_dis_closed_form(p, q) == pytest.approx(p, abs=1e-12)

    def test_small_p_limit(self):
        exact = p_dis_closed_form(0.001, 0.2)
        assert exact == pytest.approx(0.001 / (0.001 + 0.999 * 0.2), rel=1e-12)
        assert p_dis_limit(0.001, 0.2) == pytest.approx(0.005)
        assert p_reset_limit(0.001, 0.2) == 0.2
        assert limit_relative_error(0.001, 0.2) == pytest.approx(0.004, rel=1e-9)
        assert limit_relative_error(0.001, 0.2) <= 0.005

    def test_limit_without_resets(self):
        with pytest.raises(UndefinedConditionalError):
            p_dis_limit(0.1, 0.0)


class TestPartition:
    @pytest.mark.parametrize(
        ("q", "expected"),
        [(0.5, (1, 1, 1)), (0.1, (1, 1, 9)), (0.25, (1, 1, 3)), (0.0, (1, 0, 1)), (1.0, (1, 1, 0))],
    )
    def test_minimal_construction(self, q, expected):
        partition = plan_partition(q)
        assert (partition.disaster_count, partition.reset_count, partition.keep_count) == expected
        assert partition.realized_q == pytest.approx(q)

    def test_explicit_count(self):
        partition = plan_partition(0.5, 8)
        assert (partition.disaster_count, partition.reset_count, partition.keep_count) == (2, 3, 3)

    def test_coarse_count_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="branchsim.protocols.disaster"):
            partition = plan_partition(0.3, 4)
        assert partition.realized_q == pytest.approx(1 / 3)
        assert "realized" in caplog.text

    def test_too_few_macrostates(self):
        with pytest.raises(PartitionError):
            DisasterConfig(0.1, 0.5, macrostate_count=1)

    def test_backup_index_range(self):
        with pytest.raises(PartitionError):
            disaster_plan(DisasterConfig(0.1, 0.5, backup_index=3))

    @pytest.mark.parametrize("macrostate_count", [None, 8, 12])
    def test_register_realizes_the_partition_q(self, macrostate_count):
        plan = disaster_plan(DisasterConfig(0.2, 0.3, macrostate_count=macrostate_count))
        assert plan.register.realized_q == pytest.approx(plan.partition.realized_q, abs=1e-15)

    @pytest.mark.parametrize("macrostate_count", [40, 100])
    def test_dense_operator_limit(self, macrostate_count):
        cfg = DisasterConfig(0.1, 0.5, macrostate_count=macrostate_count)
        with pytest.raises(CapacityError, match=str(MAX_OPERATOR_DIM)):
            disaster_plan(cfg)


class TestCycleUnitary:
    def test_group_weights_with_eight_macrostates(self):
        weights = group_weights(DisasterConfig(0.2, 0.5, macrostate_count=8))
        assert [weights[g] for g in ("k1", "k2", "k3")] == pytest.approx([0.2, 0.4, 0.4], abs=1e-12)

    def test_no_disaster_no_reset(self):
        weights = group_weights(DisasterConfig(0.0, 0.0))
        assert weights["k3"] == pytest.approx(1.0, abs=1e-12)

    def test_certain_disaster(self):
        weights = group_weights(DisasterConfig(1.0, 0.3))
        assert weights["k1"] == pytest.approx(1.0, abs=1e-12)

    def test_uniform_within_groups(self):
        plan = disaster_plan(DisasterConfig(0.2, 0.5, macrostate_count=8))
        d = decompose(apply(plan.cycle, plan.initial_state), plan.layout)
        assert [d.weight_of(k) for k in plan.register.indices("k2")] == pytest.approx([0.4 / 3] * 3)

    @pytest.mark.parametrize("scenario", list(Scenario))
    def test_operators_are_unitary(self, scenario):
        plan = disaster_plan(DisasterConfig(0.2, 0.25, scenario, macrostate_count=6, backup_index=2))
        assert plan.cycle.unitarity_error <= 1e-10
        assert plan.erasure.unitarity_error <= 1e-10


class TestErasure:
    def test_concentrates_observer_on_restored_state(self):
        plan = disaster_plan(DisasterConfig(0.2, 0.5))
        erased = apply(plan.erasure, apply(plan.cycle, plan.initial_state))
        d = decompose(erased, plan.layout)
        m = plan.partition.macrostate_count
        assert d.weight_of(m) == pytest.approx(0.6, abs=1e-12)
        for group in ("k1", "k2"):
            for k in plan.register.indices(group):
                assert d.weight_of(k) <= 1e-12

    def test_dump_keeps_the_erased_record(self):
        plan = disaster_plan(DisasterConfig(0.2, 0.5))
        erased = apply(plan.erasure, apply(plan.cycle, plan.initial_state))
        records = decompose_register(erased, "dump").indices
        k1 = plan.register.indices("k1")[0]
        k2 = plan.register.indices("k2")[0]
        assert k1 + 1 in records and k2 + 1 in records

    def test_keep_branch_is_untouched(self):
        plan = disaster_plan(DisasterConfig(0.2, 0.5))
        k3 = plan.register.indices("k3")[0]
        psi = StateVector.basis(plan.layout, {"observer": k3, "workspace": 1})
        assert_allclose(apply(plan.erasure, psi).amps, psi.amps)

    def test_stale_dump_is_rejected(self, rng):
        plan = disaster_plan(DisasterConfig(0.2, 0.5))
        stale = StateVector.basis(plan.layout, {"observer": plan.backup_index, "dump": 1})
        with pytest.raises(AncillaNotFreshError):
            ScheduleRunner(plan.schedule, stale, Interpretation.COLLAPSE).run(rng)


@pytest.mark.parametrize(("p", "q"), GRID)
def test_quantum_weights_match_closed_forms(p, q):
    exact = exact_cycle_probabilities(DisasterConfig(p, q))
    assert exact.realized_q == pytest.approx(q, abs=1e-15)
    assert exact.p_reset == pytest.approx(p_reset_closed_form(p, q), abs=1e-10)
    if p == 0 and q == 0:
        assert exact.p_dis is None
    else:
        assert exact.p_dis == pytest.approx(p_dis_closed_form(p, q), abs=1e-10)


class TestPostResetOutcome:
    def test_uncorrelated_restored_observer_is_not_predetermined(self):
        given = disaster_given_group(DisasterConfig(0.2, 0.5))
        assert given["k1"] == pytest.approx(1 / 3, abs=1e-10)
        assert given["k2"] == pytest.approx(1 / 3, abs=1e-10)

    def test_correlated_backup_is_deterministic(self):
        given = disaster_given_group(DisasterConfig(0.2, 0.5, Scenario.CORRELATED))
        assert given["k1"] == pytest.approx(1.0, abs=1e-12)
        assert given["k2"] == pytest.approx(0.0, abs=1e-12)

    def test_collapse_narrative_is_classical(self):
        given = disaster_given_group(DisasterConfig(0.2, 0.5), Interpretation.COLLAPSE)
        assert dict(given) == {"k1": pytest.approx(1.0), "k2": pytest.approx(0.0)}

    def test_cached_results_are_read_only(self):
        cfg = DisasterConfig(0.2, 0.5)
        given = disaster_given_group(cfg)
        with pytest.raises(TypeError):
            given["k1"] = 0.0  # type: ignore[index]
        exact = exact_cycle_probabilities(cfg)
        with pytest.raises(TypeError):
            exact.group_weights["k1"] = 0.0  # type: ignore[index]
        with pytest.raises(TypeError):
            exact.disaster_given_group["k2"] = 0.0  # type: ignore[index]
        assert disaster_given_group(cfg)["k1"] == pytest.approx(1 / 3, abs=1e-10)

    def test_scenario_alias(self):
        assert Scenario("correlated_backup") is Scenario.CORRELATED


@pytest.mark.parametrize("interpretation", list(Interpretation))
def test_sampled_cycles(interpretation):
    cfg = DisasterConfig(0.2, 0.5)
    generator = np.random.default_rng(99)
    outcomes = [run_disaster_cycle(cfg, interpretation, generator) for _ in range(4000)]
    for outcome in outcomes:
        assert (outcome.disaster_after_reset is not None) == outcome.reset_occurred
    resets = [o for o in outcomes if o.reset_occurred]
    assert len(resets) / len(outcomes) == pytest.approx(0.6, abs=0.03)
    disasters = sum(1 for o in resets if o.disaster_after_reset)
    assert disasters / len(resets) == pytest.approx(1 / 3, abs=0.04)


@pytest.mark.parametrize(("reset", "disaster"), [(False, True), (True, None)])
def test_cycle_outcome_invariant(reset, disaster):
    with pytest.raises(OutcomeInvariantError) as excinfo:
        CycleOutcome(reset_occurred=reset, disaster_after_reset=disaster, branch_group="k1")
    assert isinstance(excinfo.value, BranchSimError)
    assert "Suggestion" in str(excinfo.value)
