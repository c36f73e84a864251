"""Parameter-subset splitting, independence, and the finite-domain product."""

import pytest
from conftest import SPECS, synthesize

from contractsynth.errors import RequirementViolation, SpecError
from contractsynth.ltl import INPUT, OUTPUT, Proposition, PropositionTable
from contractsynth.machine import MealyMachine, Transition
from contractsynth.split import (
    bounded_equivalence,
    build_instance_product,
    call_of,
    check_independence,
    check_irrelevant_predicates,
    check_product_equivalence,
    check_local_updates,
    check_smart_contract,
    export_split_dot,
    instantiate,
    split,
    verify_split,
)


def make_table(props):
    table = PropositionTable()
    for p in props:
        table.intern(p.origin, lambda p=p: p)
    return table


def param_machine(transitions, inputs, outputs, props, num_states=2):
    return MealyMachine(num_states, 0, transitions, inputs, outputs, make_table(props))


CALL_M = Proposition("isF_m", INPUT, "call-f", params=("m",), is_call=True, method="f")
CALL_N = Proposition("isG_n", INPUT, "call-g", params=("n",), is_call=True, method="g")
PRED_N = Proposition("a_n", INPUT, "pred-a", params=("n",))
UPD_N = Proposition("c_to_x", OUTPUT, "upd-c", params=("n",), cell="c")
SELF_M = Proposition(
    "d_to_d", OUTPUT, "self-d", params=("m",), cell="d", is_self_update=True
)
PROPS = [CALL_M, CALL_N, PRED_N, UPD_N, SELF_M]
INPUTS = ("isF_m", "isG_n", "a_n")
OUTPUTS = ("c_to_x", "d_to_d")


def test_call_of_requires_exactly_one_call():
    m = param_machine(
        [Transition(0, frozenset({"isF_m", "d_to_d"}), 0)], INPUTS, OUTPUTS, PROPS
    )
    assert call_of(m, frozenset({"isF_m", "d_to_d"})) == "isF_m"
    with pytest.raises(SpecError):
        call_of(m, frozenset({"isF_m", "isG_n"}))
    with pytest.raises(SpecError):
        call_of(m, frozenset({"d_to_d"}))


def test_local_updates_violation_cites_transition():
    # f ranges over {m} but the transition writes a cell over {n}.
    bad_t = Transition(0, frozenset({"isF_m", "c_to_x", "d_to_d"}), 1)
    m = param_machine([bad_t], INPUTS, OUTPUTS, PROPS)
    assert check_local_updates(m) == [bad_t]
    with pytest.raises(RequirementViolation) as err:
        split(m, ("m", "n"))
    assert str(bad_t) in str(err.value.counterexamples)


def test_local_updates_pass():
    ok_t = Transition(0, frozenset({"isG_n", "c_to_x", "d_to_d"}), 1)
    m = param_machine([ok_t], INPUTS, OUTPUTS, PROPS)
    assert check_local_updates(m) == []


def test_irrelevant_predicate_violation_cites_pair():
    # f's enabledness depends on a(n) with {n} not a subset of {m}: the
    # move must also exist with a_n flipped, and here it does not.
    t = Transition(0, frozenset({"isF_m", "a_n", "d_to_d"}), 1)
    m = param_machine([t], INPUTS, OUTPUTS, PROPS)
    assert check_irrelevant_predicates(m) == [(t, "a_n")]


def test_irrelevant_predicate_pass_with_twin():
    t1 = Transition(0, frozenset({"isF_m", "a_n", "d_to_d"}), 1)
    t2 = Transition(0, frozenset({"isF_m", "d_to_d"}), 1)
    m = param_machine([t1, t2], INPUTS, OUTPUTS, PROPS)
    assert check_irrelevant_predicates(m) == []


def erc20_system():
    _, _, _, machine = synthesize(SPECS / "erc20_extended.spec", resolve=True)
    return machine, split(machine, ("m", "n"))


def test_erc20_split_shapes():
    machine, system = erc20_system()
    assert machine.num_states == 4
    sizes = {s: m.num_states for s, m in system.machines.items()}
    assert sizes == {(): 2, ("m",): 2, ("m", "n"): 1}
    know = {s: [set(k) for k in m.knowledge] for s, m in system.machines.items()}
    assert know[()] == [{0, 1}, {2, 3}]
    assert know[("m",)] == [{0, 2}, {1, 3}]
    assert know[("m", "n")] == [{0, 1, 2, 3}]


def test_erc20_split_consistency_and_independence():
    _, system = erc20_system()
    assert verify_split(system) == []
    assert check_independence(system) == []


def test_verify_split_catches_corrupted_knowledge():
    _, system = erc20_system()
    m = system.machines[("m",)]
    m.knowledge[1] = m.knowledge[0]
    assert verify_split(system) != []


def test_split_dot_export():
    _, system = erc20_system()
    dot = export_split_dot(system.machines[("m",)])
    assert dot == export_split_dot(system.machines[("m",)])
    assert "K={s0, s2}" in dot
    assert "in_s" in dot


def test_instantiate():
    assert instantiate("p", (), {}) == "p"
    assert instantiate("p", ("m", "n"), {"m": "m0", "n": "n1"}) == "p[m0,n1]"


def test_erc20_product_and_bounded_oracle():
    machine, system = erc20_system()
    product = build_instance_product(system, ("m", "n"), ("v0", "v1"))
    assert check_smart_contract(product) == []
    assert check_product_equivalence(product, machine, depth=4) == {}


def test_bounded_equivalence_witness():
    left = [(0, frozenset({"a"}), 1), (1, frozenset({"b"}), 1)]
    right = [(0, frozenset({"a"}), 1)]
    assert bounded_equivalence(left, 0, left, 0, 4) is None
    witness = bounded_equivalence(left, 0, right, 0, 4)
    assert witness is not None
    trace, symbol, side = witness
    assert trace == [frozenset({"a"})]
    assert symbol == frozenset({"b"})
    assert side == "left"
    # Epsilon edges collapse: an epsilon leading to the same moves is silent.
    eps = [(0, None, 1), (1, frozenset({"a"}), 1)]
    plain = [(0, frozenset({"a"}), 0)]
    assert bounded_equivalence(eps, 0, plain, 0, 4) is None
