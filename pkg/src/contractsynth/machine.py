"""Explicit Mealy machines: minimization, free-choice and deadlock analysis, DOT export.

A transition label is the full set of propositions that are true in that
step, inputs and outputs together, so the machine is deterministic per
(state, label) even when several output choices exist for one input.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field

from . import bdd
from .errors import SpecError


@functools.total_ordering
@dataclass(frozen=True)
class Transition:
    src: int
    label: frozenset
    dst: int

    def _key(self):
        return (self.src, tuple(sorted(self.label)), self.dst)

    def __lt__(self, other: "Transition") -> bool:
        return self._key() < other._key()


@dataclass(frozen=True)
class MealyMachine:
    num_states: int
    initial: int
    transitions: tuple[Transition, ...] | list[Transition]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    table: object = None  # PropositionTable, when synthesized from a spec

    def __post_init__(self):
        object.__setattr__(self, "transitions", tuple(sorted(self.transitions)))

    def input_part(self, label: frozenset) -> frozenset:
        return label & frozenset(self.inputs)

    def output_part(self, label: frozenset) -> frozenset:
        return label & frozenset(self.outputs)

    def successors(self, state: int):
        return [t for t in self.transitions if t.src == state]

    def delta(self) -> dict[tuple[int, frozenset], int]:
        out = {}
        for t in self.transitions:
            prev = out.get((t.src, t.label))
            if prev is not None and prev != t.dst:
                raise SpecError(
                    f"nondeterministic transition from state {t.src} on {sorted(t.label)}"
                )
            out[(t.src, t.label)] = t.dst
        return out

    def accepts(self, trace) -> bool:
        """Finite-trace membership: every step must follow an existing transition."""
        delta = self.delta()
        state = self.initial
        for label in trace:
            state = delta.get((state, frozenset(label)))
            if state is None:
                return False
        return True

    def reachable_states(self) -> list[int]:
        by_src: dict[int, list[Transition]] = {}
        for t in self.transitions:
            by_src.setdefault(t.src, []).append(t)
        seen = {self.initial}
        order = [self.initial]
        frontier = [self.initial]
        while frontier:
            s = frontier.pop(0)
            for t in by_src.get(s, []):
                if t.dst not in seen:
                    seen.add(t.dst)
                    order.append(t.dst)
                    frontier.append(t.dst)
        return order

    def trim(self) -> "MealyMachine":
        """Drop unreachable states and renumber in BFS order from the initial state."""
        order = self.reachable_states()
        renum = {old: new for new, old in enumerate(order)}
        transitions = [
            Transition(renum[t.src], t.label, renum[t.dst])
            for t in self.transitions
            if t.src in renum and t.dst in renum
        ]
        return MealyMachine(
            len(order), 0, transitions, self.inputs, self.outputs, self.table
        )


def minimize(machine: MealyMachine) -> MealyMachine:
    """Language-preserving state minimization via partition refinement.

    The machine is partial; a missing transition is treated as going to an
    implicit rejecting sink, which forms its own class and is dropped again
    at the end.
    """
    machine = machine.trim()
    n = machine.num_states
    sink = n
    alphabet = sorted({t.label for t in machine.transitions}, key=sorted)
    delta = machine.delta()

    # Signature refinement over real states plus the rejecting sink.
    block_of = {s: 0 for s in range(n)}
    block_of[sink] = 1
    num_blocks = 2
    while True:
        signatures: dict[tuple, int] = {}
        new_block_of = {}
        for s in range(n + 1):
            if s == sink:
                succ = tuple(block_of[sink] for _ in alphabet)
            else:
                succ = tuple(block_of[delta.get((s, a), sink)] for a in alphabet)
            sig = (block_of[s], succ)
            if sig not in signatures:
                signatures[sig] = len(signatures)
            new_block_of[s] = signatures[sig]
        if len(signatures) == num_blocks:
            block_of = new_block_of
            break
        num_blocks = len(signatures)
        block_of = new_block_of

    sink_block = block_of[sink]
    live_blocks = sorted({block_of[s] for s in range(n)} - {sink_block})
    renum = {b: i for i, b in enumerate(live_blocks)}
    representative = {}
    for s in range(n):
        b = block_of[s]
        if b != sink_block and (b not in representative or s < representative[b]):
            representative[b] = s
    transitions = []
    for b in live_blocks:
        rep = representative[b]
        for a in alphabet:
            d = delta.get((rep, a))
            if d is not None:
                transitions.append(Transition(renum[b], a, renum[block_of[d]]))
    out = MealyMachine(
        len(live_blocks),
        renum[block_of[machine.initial]],
        transitions,
        machine.inputs,
        machine.outputs,
        machine.table,
    )
    return out.trim()


# ---------------------------------------------------------------------------
# Analyses


@dataclass(frozen=True)
class FreeChoice:
    state: int
    input_label: frozenset
    output_options: tuple[frozenset, ...]


@dataclass(frozen=True)
class Deadlock:
    state: int
    valuation: frozenset  # determined propositions that are true
    determined: tuple[str, ...]


@dataclass
class AnalysisReport:
    realizable: bool
    free_choices: list[FreeChoice] = field(default_factory=list)
    deadlocks: list[Deadlock] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"realizable: {'yes' if self.realizable else 'no'}"]
        if not self.free_choices:
            lines.append("free choices: none")
        else:
            lines.append(f"free choices: {len(self.free_choices)}")
            for fc in self.free_choices:
                opts = " / ".join(
                    "{" + ", ".join(sorted(o)) + "}" for o in fc.output_options
                )
                lines.append(
                    f"  state {fc.state} on input {{{', '.join(sorted(fc.input_label))}}}: {opts}"
                )
        if not self.deadlocks:
            lines.append("potential deadlocks: none")
        else:
            lines.append(f"potential deadlocks: {len(self.deadlocks)}")
            for dl in self.deadlocks:
                val = ", ".join(
                    p if p in dl.valuation else f"!{p}" for p in dl.determined
                )
                lines.append(f"  state {dl.state} under {val}: no transition enabled")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "realizable": self.realizable,
                "free_choices": [
                    {
                        "state": fc.state,
                        "input": sorted(fc.input_label),
                        "outputs": [sorted(o) for o in fc.output_options],
                    }
                    for fc in self.free_choices
                ],
                "deadlocks": [
                    {
                        "state": dl.state,
                        "true": sorted(dl.valuation),
                        "false": sorted(set(dl.determined) - set(dl.valuation)),
                    }
                    for dl in self.deadlocks
                ],
            },
            indent=2,
            sort_keys=True,
        )


def detect_free_choices(machine: MealyMachine) -> list[FreeChoice]:
    """States where one input admits several winning output choices."""
    options: dict[tuple[int, frozenset], set[frozenset]] = {}
    for t in machine.transitions:
        key = (t.src, machine.input_part(t.label))
        options.setdefault(key, set()).add(machine.output_part(t.label))
    out = []
    for (state, inp), outs in sorted(options.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]))):
        if len(outs) > 1:
            out.append(FreeChoice(state, inp, tuple(sorted(outs, key=sorted))))
    return out


def resolve_free_choices(machine: MealyMachine, policy=None) -> MealyMachine:
    """Commit to one output per (state, input).

    The default policy keeps the lexicographically smallest output cube, so
    resolution is deterministic across runs.  A custom policy receives the
    sorted list of candidate output label sets and returns the chosen one.
    """
    if policy is None:
        policy = lambda options: options[0]
    chosen: dict[tuple[int, frozenset], frozenset] = {}
    options: dict[tuple[int, frozenset], set[frozenset]] = {}
    for t in machine.transitions:
        key = (t.src, machine.input_part(t.label))
        options.setdefault(key, set()).add(machine.output_part(t.label))
    for key, outs in options.items():
        chosen[key] = policy(sorted(outs, key=sorted))
    transitions = [
        t
        for t in machine.transitions
        if machine.output_part(t.label) == chosen[(t.src, machine.input_part(t.label))]
    ]
    return MealyMachine(
        machine.num_states, machine.initial, transitions, machine.inputs, machine.outputs, machine.table
    ).trim()


def necessarily_true(machine: MealyMachine, determined: tuple[str, ...]) -> dict[int, frozenset]:
    """Determined propositions guaranteed true whenever a state is entered.

    A determined (class-1) proposition is monotone: once it holds, it holds
    forever.  So a proposition is necessarily true at state s if on every
    path into s it was already true, i.e. every incoming transition either
    carries it or starts from a state where it is already necessary.  The
    initial state starts with no history, hence nothing necessary there.
    """
    det = frozenset(determined)
    states = machine.reachable_states()
    nec = {s: det for s in states}
    nec[machine.initial] = frozenset()
    changed = True
    while changed:
        changed = False
        for t in machine.transitions:
            incoming = (nec[t.src] | (t.label & det)) & nec[t.dst]
            if t.dst == machine.initial:
                continue
            if incoming != nec[t.dst]:
                nec[t.dst] = incoming
                changed = True
    return nec


def detect_deadlocks(
    machine: MealyMachine,
    determined: tuple[str, ...],
    allowed=None,
) -> list[Deadlock]:
    """States that can lose every transition under some determined valuation.

    `determined` names class-1 input propositions: they may flip to true at
    any time and then stay true.  For each reachable state we try every
    valuation of them that is consistent with how the state can be entered
    and report it if no outgoing transition matches.  `allowed`, when given,
    is a predicate over the set of true determined propositions restricting
    valuations to assumption-consistent ones.
    """
    det = tuple(sorted(determined))
    for p in det:
        if p not in machine.inputs:
            raise SpecError(f"determined proposition {p!r} is not an input proposition")
    if not det:
        return []
    nec = necessarily_true(machine, det)
    by_state: dict[int, list[frozenset]] = {}
    for t in machine.transitions:
        by_state.setdefault(t.src, []).append(t.label & frozenset(det))
    out = []
    for state in machine.reachable_states():
        for bits in range(1 << len(det)):
            valuation = frozenset(p for i, p in enumerate(det) if bits >> i & 1)
            if not nec[state] <= valuation:
                continue
            if allowed is not None and not allowed(valuation):
                continue
            if valuation not in by_state.get(state, []):
                out.append(Deadlock(state, valuation, det))
    return sorted(out, key=lambda d: (d.state, sorted(d.valuation)))


def analyze(
    machine: MealyMachine, determined: tuple[str, ...] = (), allowed=None
) -> AnalysisReport:
    return AnalysisReport(
        realizable=True,
        free_choices=detect_free_choices(machine),
        deadlocks=detect_deadlocks(machine, determined, allowed),
    )


# ---------------------------------------------------------------------------
# DOT export


def _merge_cubes(labels: list[frozenset], props: list[str]) -> list[dict[str, bool]]:
    """Represent a set of minterms as disjoint cubes over `props`."""
    mgr = bdd.Manager(num_vars=len(props))
    index = {p: i for i, p in enumerate(props)}
    union = mgr.disj(
        mgr.cube({index[p]: (p in label) for p in props}) for label in labels
    )
    cubes = []
    for cube in mgr.cube_iter(union, range(len(props))):
        cubes.append({props[v]: val for v, val in cube.items()})
    return cubes


def _render_cube(cube: dict[str, bool], inputs, outputs) -> str:
    def side(names):
        lits = [(n if cube[n] else f"!{n}") for n in names if n in cube]
        return " & ".join(lits) if lits else "*"

    return f"{side(inputs)} | {side(outputs)}"


def export_dot(machine: MealyMachine, name: str = "machine") -> str:
    """Deterministic DOT text; one edge per state pair, cubes merged."""
    props = sorted(set(machine.inputs) | set(machine.outputs))
    by_pair: dict[tuple[int, int], list[frozenset]] = {}
    for t in machine.transitions:
        by_pair.setdefault((t.src, t.dst), []).append(t.label)
    lines = [
        f"digraph {name} {{",
        "  rankdir=LR;",
        '  __init [shape=point, label=""];',
    ]
    for s in range(machine.num_states):
        lines.append(f'  q{s} [shape=circle, label="q{s}"];')
    lines.append(f"  __init -> q{machine.initial};")
    for (src, dst), labels in sorted(by_pair.items()):
        cubes = _merge_cubes(labels, props)
        rendered = sorted(
            _render_cube(c, machine.inputs, machine.outputs) for c in cubes
        )
        text = "\\n".join(rendered).replace('"', '\\"')
        lines.append(f'  q{src} -> q{dst} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
