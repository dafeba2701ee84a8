import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import unitary_group

from branchsim.core import Operator, Register, SpaceLayout, StateVector, apply
from branchsim.exceptions import (
    AncillaNotFreshError,
    EmptyBranchError,
    ObserverRegisterError,
    RegisterError,
)
from branchsim.observer import (
    MacrostateRegister,
    born_weights,
    collapse_to,
    decompose,
    decompose_register,
    project_onto,
    require_fresh,
    sample_macrostate,
)


def entangled(layout: SpaceLayout, weights: dict[int, float]) -> StateVector:
    amps = np.zeros(layout.total_dim, dtype=complex)
    for k, w in weights.items():
        amps[layout.to_global((k, k % layout.dims[1]))] = math.sqrt(w)
    return StateVector(layout, amps)


@pytest.fixture
def three_way() -> SpaceLayout:
    return SpaceLayout.of(Register("observer", 3, "observer"), Register("env", 3))


def test_branch_weights_of_entangled_state(three_way):
    psi = entangled(three_way, {0: 0.2, 1: 0.3, 2: 0.5})
    d = decompose(psi, three_way)
    assert d.indices == (0, 1, 2)
    assert [w for _, w in born_weights(d)] == pytest.approx([0.2, 0.3, 0.5], abs=1e-12)
    assert d.total_weight == pytest.approx(1.0, abs=1e-12)


def test_weights_normalized_for_unnormalized_state(three_way):
    psi = StateVector(three_way, 2.0 * entangled(three_way, {0: 0.5, 2: 0.5}).amps)
    assert born_weights(decompose(psi, three_way)) == [(0, pytest.approx(0.5)), (2, pytest.approx(0.5))]


def test_round_trip(three_way, random_state):
    psi = random_state(three_way)
    rebuilt = decompose(psi, three_way).reconstruct()
    assert_allclose(rebuilt.amps, psi.amps, atol=1e-12)


def test_round_trip_on_inner_register(random_state):
    layout = SpaceLayout.of(Register("a", 2), Register("b", 3), Register("c", 2))
    psi = random_state(layout)
    d = decompose_register(psi, "b")
    assert d.branch(1).environment_state.layout.dims == (2, 2)
    assert_allclose(d.reconstruct().amps, psi.amps, atol=1e-12)


def test_total_weight_is_invariant_under_unitaries(three_way, random_state):
    psi = StateVector(three_way, 3.0 * random_state(three_way).amps)
    before = decompose(psi, three_way).total_weight
    for seed in (1, 2, 3):
        u = Operator(unitary_group.rvs(three_way.total_dim, random_state=seed))
        assert decompose(apply(u, psi), three_way).total_weight == pytest.approx(before, rel=1e-12)


def test_tiny_branches_are_pruned(three_way):
    amps = entangled(three_way, {0: 1.0}).amps.copy()
    amps[three_way.to_global((1, 1))] = 1e-9
    d = decompose(StateVector(three_way, amps), three_way)
    assert d.indices == (0,)
    assert d.weight_of(1) == 0.0


def test_decompose_requires_observer(random_state):
    layout = SpaceLayout.of(Register("a", 2), Register("b", 2))
    with pytest.raises(ObserverRegisterError):
        decompose(random_state(layout), layout)


def test_zero_state_has_no_born_weights(three_way):
    d = decompose(StateVector(three_way, np.zeros(9)), three_way)
    with pytest.raises(EmptyBranchError):
        born_weights(d)


def test_sampling_frequencies(three_way, rng):
    d = decompose(entangled(three_way, {0: 0.2, 1: 0.3, 2: 0.5}), three_way)
    draws = np.array([sample_macrostate(d, rng) for _ in range(20_000)])
    assert np.bincount(draws, minlength=3) / draws.size == pytest.approx([0.2, 0.3, 0.5], abs=0.02)


def test_sampling_skips_zero_weight_branches(three_way, rng):
    d = decompose(entangled(three_way, {0: 0.5, 2: 0.5}), three_way)
    assert {sample_macrostate(d, rng) for _ in range(500)} == {0, 2}


def test_collapse_is_normalized_and_idempotent(three_way):
    psi = entangled(three_way, {0: 0.2, 1: 0.8})
    once = collapse_to(psi, 1)
    assert once.norm() == pytest.approx(1.0, abs=1e-12)
    assert_allclose(collapse_to(once, 1).amps, once.amps, atol=1e-12)
    assert decompose(once, three_way).indices == (1,)


def test_projection_onto_empty_branch(three_way):
    with pytest.raises(EmptyBranchError):
        project_onto(entangled(three_way, {0: 1.0}), "observer", 2)


def test_require_fresh():
    layout = SpaceLayout.of(Register("observer", 2, "observer"), Register("dump", 3, "ancilla"))
    require_fresh(StateVector.basis(layout, {"observer": 1}), "dump")
    with pytest.raises(AncillaNotFreshError):
        require_fresh(StateVector.basis(layout, {"dump": 2}), "dump")


class TestMacrostateRegister:
    def test_groups(self):
        register = MacrostateRegister(
            ("d", "r1", "r2", "s", "restored"),
            (True, False, False, False, False),
            (False, True, True, False, False),
            frozenset({4}),
        )
        assert [register.group_of(i) for i in range(5)] == ["k1", "k2", "k2", "k3", "restored"]
        assert register.indices("k2") == (1, 2)
        assert register.realized_q == pytest.approx(2 / 3)

    def test_needs_two_macrostates(self):
        with pytest.raises(RegisterError):
            MacrostateRegister(("only",), (False,), (False,))

    def test_flag_lengths_must_match(self):
        with pytest.raises(RegisterError):
            MacrostateRegister(("a", "b"), (False,), (False, True))
