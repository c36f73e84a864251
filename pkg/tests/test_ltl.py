"""Propositional approximation and the reference trace oracle."""

import itertools

import pytest
from conftest import SPECS

from contractsynth.errors import SpecError
from contractsynth.formulas import (
    Historically,
    Not,
    Once,
    Prop,
    Since,
    WeakYesterday,
    Yesterday,
)
from contractsynth.frontend import parse_spec_file
from contractsynth.ltl import (
    INPUT,
    OUTPUT,
    Proposition,
    PropositionTable,
    approximate,
    cell_updates,
    eval_trace,
)


def test_table_interning_is_injective():
    table = PropositionTable()
    make = lambda: Proposition("p", INPUT, "origin-a")
    first = table.intern("origin-a", make)
    assert table.intern("origin-a", make) is first
    with pytest.raises(SpecError):
        table.intern("origin-b", lambda: Proposition("p", INPUT, "origin-b"))


def test_voting_table_contents():
    approx = approximate(parse_spec_file(SPECS / "voting.spec"))
    names = {p.name for p in approx.table}
    assert {
        "isVote_methodinput",
        "isClose_methodinput",
        "isReveal_methodinput",
        "gt_time_cTime",
        "eq_sender_owner",
        "in_sender_voters",
        "voters_to_add_sender_voters",
        "voters_to_voters",
    } <= names
    calls = {p.name for p in approx.table.calls}
    assert calls == {"isVote_methodinput", "isClose_methodinput", "isReveal_methodinput"}
    self_updates = {p.name for p in approx.table.self_updates}
    assert self_updates == {"voters_to_voters"}
    roles = {p.name: p.role for p in approx.table}
    assert roles["voters_to_voters"] == OUTPUT
    assert roles["gt_time_cTime"] == INPUT


def test_cell_updates_exactly_one():
    """With two update options for one cell, exactly one must fire per step."""
    spec = parse_spec_file(SPECS / "voting.spec")
    approx = approximate(spec)
    table = approx.table
    constraint = cell_updates(spec.declarations, table)
    updates = sorted(p.name for p in table.outputs)
    assert len(updates) == 2
    for bits in itertools.product([False, True], repeat=2):
        label = frozenset(name for name, b in zip(updates, bits) if b)
        holds = eval_trace(constraint, [label], 0)
        assert holds == (sum(bits) == 1)


def test_oracle_operator_semantics():
    a, b = Prop("a"), Prop("b")
    trace = [frozenset({"a"}), frozenset(), frozenset({"a", "b"}), frozenset({"b"})]
    assert not eval_trace(Yesterday(a), trace, 0)
    assert eval_trace(Yesterday(a), trace, 1)
    assert eval_trace(WeakYesterday(a), trace, 0)
    assert not eval_trace(WeakYesterday(a), trace, 2)
    assert eval_trace(Once(b), trace, 3)
    assert not eval_trace(Once(b), trace, 1)
    assert eval_trace(Historically(Not(b)), trace, 1)
    assert not eval_trace(Historically(Not(b)), trace, 2)
    # b S a: a held at some point, b ever since (strictly after it).
    assert eval_trace(Since(b, a), trace, 3)
    assert not eval_trace(Since(b, a), trace, 1)
    with pytest.raises(IndexError):
        eval_trace(a, trace, 4)


def test_approximation_has_input_and_output_props():
    approx = approximate(parse_spec_file(SPECS / "toy.spec"))
    assert {p.name for p in approx.table.inputs} == {"a"}
    assert {p.name for p in approx.table.outputs} == {"b"}
