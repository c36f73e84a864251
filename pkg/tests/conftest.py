"""Shared helpers for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

from contractsynth.formulas import (
    And,
    Equiv,
    Historically,
    Implies,
    Not,
    Once,
    Or,
    Prop,
    Since,
    WeakYesterday,
    Yesterday,
)
from contractsynth.frontend import parse_spec_file
from contractsynth.game import build_game, extract_machine, winning_region
from contractsynth.ltl import INPUT, OUTPUT, Proposition, PropositionTable, approximate
from contractsynth.machine import minimize, resolve_free_choices

REPO = Path(__file__).resolve().parent.parent
SPECS = REPO / "specs"


def raw_table(inputs, outputs) -> PropositionTable:
    """Table of bare propositions, for games built from hand-written formulas."""
    table = PropositionTable()
    for name in inputs:
        table.intern(("raw", name), lambda n=name: Proposition(n, INPUT, n, display=n))
    for name in outputs:
        table.intern(("raw", name), lambda n=name: Proposition(n, OUTPUT, n, display=n))
    return table


def synthesize(spec_path, resolve=False):
    """Full pipeline up to the minimized (optionally resolved) machine."""
    spec = parse_spec_file(spec_path)
    approx = approximate(spec)
    game = build_game(approx.formula, approx.table, environment=approx.environment)
    region = winning_region(game)
    result = extract_machine(game, region)
    machine = minimize(result.machine)
    if resolve:
        machine = resolve_free_choices(machine)
    return spec, approx, game, machine


def random_formula(rng: random.Random, props, depth: int):
    """Seeded random past-time formula over the given proposition names."""
    if depth == 0 or rng.random() < 0.25:
        return Prop(rng.choice(props))
    kind = rng.randrange(10)
    sub = lambda: random_formula(rng, props, depth - 1)
    if kind == 0:
        return Not(sub())
    if kind == 1:
        return And(sub(), sub())
    if kind == 2:
        return Or(sub(), sub())
    if kind == 3:
        return Implies(sub(), sub())
    if kind == 4:
        return Equiv(sub(), sub())
    if kind == 5:
        return Yesterday(sub())
    if kind == 6:
        return WeakYesterday(sub())
    if kind == 7:
        return Since(sub(), sub())
    if kind == 8:
        return Once(sub())
    return Historically(sub())
