"""Mealy machine minimization, analyses, and DOT export."""

import itertools
import random

import pytest

from contractsynth.errors import SpecError
from contractsynth.machine import (
    MealyMachine,
    Transition,
    analyze,
    detect_deadlocks,
    detect_free_choices,
    export_dot,
    minimize,
    necessarily_true,
    resolve_free_choices,
)

INPUTS = ("a", "b")
OUTPUTS = ("x",)
LABELS = [
    frozenset(s)
    for r in range(4)
    for s in itertools.combinations(("a", "b", "x"), r)
]


def random_machine(rng, max_states=6):
    n = rng.randrange(1, max_states + 1)
    transitions = []
    for s in range(n):
        for label in LABELS:
            if rng.random() < 0.4:
                transitions.append(Transition(s, label, rng.randrange(n)))
    return MealyMachine(n, 0, transitions, INPUTS, OUTPUTS)


def equivalent(m1, m2):
    """Exact finite-trace equivalence via synchronized pair exploration."""
    d1, d2 = m1.delta(), m2.delta()
    seen = {(m1.initial, m2.initial)}
    frontier = [(m1.initial, m2.initial)]
    while frontier:
        s1, s2 = frontier.pop()
        for label in LABELS:
            n1 = d1.get((s1, label))
            n2 = d2.get((s2, label))
            if (n1 is None) != (n2 is None):
                return False
            if n1 is None:
                continue
            if (n1, n2) not in seen:
                seen.add((n1, n2))
                frontier.append((n1, n2))
    return True


def test_minimize_random_machines():
    rng = random.Random(3)
    for _ in range(100):
        m = random_machine(rng)
        mm = minimize(m)
        assert mm.num_states <= m.num_states
        assert equivalent(m, mm)
        assert minimize(mm) == mm


def test_minimize_merges_equivalent_states():
    # States 1 and 2 accept the same language and must merge.
    a = frozenset({"a"})
    m = MealyMachine(
        3,
        0,
        [
            Transition(0, a, 1),
            Transition(0, frozenset({"b"}), 2),
            Transition(1, a, 1),
            Transition(2, a, 2),
        ],
        INPUTS,
        OUTPUTS,
    )
    mm = minimize(m)
    assert mm.num_states == 2
    assert equivalent(m, mm)


def test_dead_end_state_is_not_dropped():
    # A state with no outgoing transitions still accepts the empty suffix.
    a = frozenset({"a"})
    m = MealyMachine(2, 0, [Transition(0, a, 1)], INPUTS, OUTPUTS)
    mm = minimize(m)
    assert mm.num_states == 2
    assert equivalent(m, mm)


def test_delta_rejects_nondeterminism():
    a = frozenset({"a"})
    m = MealyMachine(2, 0, [Transition(0, a, 0), Transition(0, a, 1)], INPUTS, OUTPUTS)
    with pytest.raises(SpecError):
        m.delta()


def test_free_choice_detection_and_resolution():
    # One input admits two output choices at state 0.
    m = MealyMachine(
        1,
        0,
        [
            Transition(0, frozenset({"a"}), 0),
            Transition(0, frozenset({"a", "x"}), 0),
            Transition(0, frozenset({"b"}), 0),
        ],
        INPUTS,
        OUTPUTS,
    )
    choices = detect_free_choices(m)
    assert len(choices) == 1
    assert choices[0].state == 0
    assert choices[0].input_label == frozenset({"a"})
    resolved = resolve_free_choices(m)
    assert detect_free_choices(resolved) == []
    # Default policy keeps the lexicographically smallest output cube.
    assert frozenset({"a"}) in {t.label for t in resolved.transitions}
    assert frozenset({"a", "x"}) not in {t.label for t in resolved.transitions}


def test_necessarily_true_and_deadlocks():
    # After the transition carrying p, p stays true but state 1 has no move
    # under p=true, so valuation {p} deadlocks there.
    p = frozenset({"a"})
    m = MealyMachine(
        2,
        0,
        [Transition(0, p, 1), Transition(0, frozenset(), 0), Transition(1, frozenset(), 1)],
        INPUTS,
        OUTPUTS,
    )
    nec = necessarily_true(m, ("a",))
    assert nec[0] == frozenset()
    assert nec[1] == frozenset({"a"})
    deadlocks = detect_deadlocks(m, ("a",))
    assert [(d.state, set(d.valuation)) for d in deadlocks] == [(1, {"a"})]
    # An `allowed` filter can rule out assumption-violating valuations.
    restricted = detect_deadlocks(m, ("a",), allowed=lambda v: "a" not in v)
    assert restricted == []


def test_deadlock_rejects_unknown_prop():
    m = MealyMachine(1, 0, [], INPUTS, OUTPUTS)
    with pytest.raises(SpecError):
        detect_deadlocks(m, ("zzz",))


def test_analysis_report_rendering():
    m = MealyMachine(
        1,
        0,
        [Transition(0, frozenset({"a"}), 0), Transition(0, frozenset({"a", "x"}), 0)],
        INPUTS,
        OUTPUTS,
    )
    report = analyze(m)
    text = report.to_text()
    assert "free choices: 1" in text
    assert "realizable: yes" in text
    assert '"free_choices"' in report.to_json()


def test_dot_export_deterministic_and_merged():
    m = MealyMachine(
        2,
        0,
        [
            Transition(0, frozenset({"a"}), 1),
            Transition(0, frozenset({"a", "b"}), 1),
            Transition(1, frozenset({"x"}), 1),
        ],
        INPUTS,
        OUTPUTS,
    )
    dot = export_dot(m)
    assert dot == export_dot(m)
    assert "digraph" in dot
    # The two a-transitions differ only in b, so they merge into one cube.
    assert "a | " in dot
    assert "q0 -> q1" in dot
