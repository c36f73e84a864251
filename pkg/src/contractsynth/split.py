"""Splitting a synthesized machine into per-parameter-subset machines.

A parameterized spec is synthesized as a single-instance machine first.
Splitting projects that machine onto each parameter subset that owns at
least one method call, labels the resulting states with knowledge sets
about the original machine, and checks that the distributed machines can
always reach a definite verdict (independence).  A finite-domain product
of the split machines serves as a test oracle for the construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import IndependenceFailure, RequirementViolation, SpecError
from .machine import MealyMachine, Transition


def _prop_params(table, name: str) -> tuple[str, ...]:
    return table.get(name).params


def call_of(machine: MealyMachine, label: frozenset) -> str:
    """The unique method-call proposition of a transition label."""
    calls = [p for p in label if p in machine.table and machine.table.get(p).is_call]
    if len(calls) != 1:
        raise SpecError(
            f"transition label {sorted(label)} carries {len(calls)} method calls, expected exactly one"
        )
    return calls[0]


def _call_params(machine: MealyMachine, label: frozenset) -> tuple[str, ...]:
    return _prop_params(machine.table, call_of(machine, label))


# ---------------------------------------------------------------------------
# Requirements on the single-instance machine


def check_local_updates(machine: MealyMachine) -> list[Transition]:
    """Calls over P_i may only trigger non-self updates over the same P_i.

    Returns the violating transitions (empty list means the check passed).
    """
    table = machine.table
    bad = []
    for t in machine.transitions:
        call_params = None
        for name in sorted(t.label):
            prop = table.get(name)
            if prop.role != "output" or prop.is_self_update:
                continue
            if call_params is None:
                call_params = {
                    frozenset(_prop_params(table, c))
                    for c in t.label
                    if table.get(c).is_call
                }
            if frozenset(prop.params) not in call_params:
                bad.append(t)
                break
    return bad


def check_irrelevant_predicates(machine: MealyMachine) -> list[tuple[Transition, str]]:
    """Method enabledness must not depend on predicates outside its parameters.

    For a transition with call f(P_i) and a non-call input predicate a(P_j)
    with P_j not a subset of P_i, the same move must exist with a flipped:
    a transition with label A xor {a} to the same target.  Returns
    (transition, predicate) pairs lacking their flipped twin.
    """
    table = machine.table
    existing = {(t.src, t.label, t.dst) for t in machine.transitions}
    bad = []
    for t in machine.transitions:
        p_i = frozenset(_call_params(machine, t.label))
        for name in sorted(machine.inputs):
            prop = table.get(name)
            if prop.is_call or frozenset(prop.params) <= p_i:
                continue
            twin = t.label ^ {name}
            if (t.src, twin, t.dst) not in existing:
                bad.append((t, name))
    return bad


# ---------------------------------------------------------------------------
# Subset construction


@dataclass(frozen=True)
class SubsetTransition:
    src: int
    label: frozenset
    dst: int
    guards: frozenset  # original-machine states s whose guard in_s occurs


@dataclass
class ParamSubsetMachine:
    subset: tuple[str, ...]
    num_states: int
    initial: int
    transitions: list[SubsetTransition]
    knowledge: list[frozenset]  # per state: subset of original states

    def successors(self, state: int):
        return [t for t in self.transitions if t.src == state]


@dataclass
class SplitSystem:
    original: MealyMachine
    machines: dict[tuple[str, ...], ParamSubsetMachine]
    table: object

    def subsets(self) -> list[tuple[str, ...]]:
        return sorted(self.machines, key=lambda s: (len(s), s))


def _epsilon_closure(by_src: dict[int, list[Transition]], eps, states) -> frozenset:
    out = set(states)
    frontier = list(states)
    while frontier:
        s = frontier.pop()
        for t in by_src.get(s, []):
            if eps(t) and t.dst not in out:
                out.add(t.dst)
                frontier.append(t.dst)
    return frozenset(out)


def split(machine: MealyMachine, parameters: tuple[str, ...] = ()) -> SplitSystem:
    """One knowledge-labeled machine per parameter subset owning a call.

    Transitions whose call belongs to a different subset become epsilon
    edges; the subset construction removes them and the visited subsets of
    original states become the knowledge sets.  Guard sets record, per
    determinized transition, from which original states the move exists.
    """
    table = machine.table
    if table is None:
        raise SpecError("split requires a machine with a proposition table")
    bad = check_local_updates(machine)
    if bad:
        raise RequirementViolation(
            "local-updates requirement violated", [str(t) for t in bad]
        )
    bad = check_irrelevant_predicates(machine)
    if bad:
        raise RequirementViolation(
            "irrelevant-predicates requirement violated",
            [f"{t} missing flipped twin for {name}" for t, name in bad],
        )

    order = {p: i for i, p in enumerate(parameters)}
    subsets = sorted(
        {_call_params(machine, t.label) for t in machine.transitions},
        key=lambda s: (len(s), s),
    )
    by_src: dict[int, list[Transition]] = {}
    for t in machine.transitions:
        by_src.setdefault(t.src, []).append(t)

    machines: dict[tuple[str, ...], ParamSubsetMachine] = {}
    for subset in subsets:
        def is_eps(t, subset=subset):
            return _call_params(machine, t.label) != subset

        init = _epsilon_closure(by_src, is_eps, {machine.initial})
        ids = {init: 0}
        knowledge = [init]
        transitions: list[SubsetTransition] = []
        frontier = [init]
        while frontier:
            k = frontier.pop(0)
            sid = ids[k]
            by_label: dict[frozenset, set] = {}
            guards: dict[frozenset, set] = {}
            for s in sorted(k):
                for t in by_src.get(s, []):
                    if is_eps(t):
                        continue
                    by_label.setdefault(t.label, set()).add(t.dst)
                    guards.setdefault(t.label, set()).add(s)
            for label in sorted(by_label, key=sorted):
                target = _epsilon_closure(by_src, is_eps, by_label[label])
                tid = ids.get(target)
                if tid is None:
                    tid = len(ids)
                    ids[target] = tid
                    knowledge.append(target)
                    frontier.append(target)
                transitions.append(
                    SubsetTransition(sid, label, tid, frozenset(guards[label]))
                )
        machines[subset] = ParamSubsetMachine(
            subset, len(knowledge), 0, transitions, knowledge
        )
    return SplitSystem(machine, machines, table)


def verify_split(sys: SplitSystem) -> list[str]:
    """Consistency of knowledge sets with the original transitions.

    Checks the two subset-construction properties: (1) a state's outgoing
    moves are exactly the moves of all original states it considers
    possible, and (2) following a shared move keeps every machine's
    knowledge consistent.  Returns human-readable violations.
    """
    machine = sys.original
    by_src: dict[int, list[Transition]] = {}
    for t in machine.transitions:
        by_src.setdefault(t.src, []).append(t)
    problems = []
    for subset, m in sys.machines.items():
        for sid, know in enumerate(m.knowledge):
            here = {
                (t.label, s) for t in m.transitions if t.src == sid for s in t.guards
            }
            for s in know:
                for t in by_src.get(s, []):
                    if _call_params(machine, t.label) != subset:
                        continue
                    if (t.label, s) not in here:
                        problems.append(
                            f"{subset}: state {sid} misses move {sorted(t.label)} of original state {s}"
                        )
            for label, s in here:
                if s not in know:
                    problems.append(
                        f"{subset}: state {sid} guards on {s} outside its knowledge"
                    )
        for t in m.transitions:
            for s in t.guards:
                for orig in by_src.get(s, []):
                    if orig.label == t.label and orig.dst not in m.knowledge[t.dst]:
                        problems.append(
                            f"{subset}: successor knowledge of state {t.src} misses {orig.dst}"
                        )
    return problems


def export_split_dot(m: ParamSubsetMachine, name: str = "split") -> str:
    """Deterministic DOT text with knowledge sets in the node captions."""
    lines = [
        f"digraph {name} {{",
        "  rankdir=LR;",
        '  __init [shape=point, label=""];',
    ]
    for sid, know in enumerate(m.knowledge):
        caption = "K={" + ", ".join(f"s{s}" for s in sorted(know)) + "}"
        lines.append(f'  q{sid} [shape=circle, label="q{sid}\\n{caption}"];')
    lines.append(f"  __init -> q{m.initial};")
    by_pair: dict[tuple[int, int], list[str]] = {}
    for t in sorted(m.transitions, key=lambda t: (t.src, t.dst, sorted(t.label))):
        guard = " || ".join(f"in_s{s}" for s in sorted(t.guards))
        text = f"({guard}) & {{{', '.join(sorted(t.label))}}}"
        by_pair.setdefault((t.src, t.dst), []).append(text)
    for (src, dst), texts in sorted(by_pair.items()):
        label = "\\n".join(texts).replace('"', '\\"')
        lines.append(f'  q{src} -> q{dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Independence


def check_independence(sys: SplitSystem) -> list[str]:
    """Every machine must reach a definite verdict on each of its moves.

    For a transition of the machine for P_i, combining its knowledge with
    any combination of states of the machines for subsets of P_i must
    either prove the original machine sits on a guard state (enabled) or
    rule every guard state out (disabled).  Returns counterexamples.
    """
    problems = []
    for subset, m in sys.machines.items():
        ancestors = [
            s for s in sys.subsets() if set(s) <= set(subset)
        ]
        grouped: dict[tuple[int, frozenset, int], SubsetTransition] = {
            (t.src, t.label, t.dst): t for t in m.transitions
        }
        for (src, label, dst), t in sorted(
            grouped.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]), kv[0][2])
        ):
            for combo in itertools.product(
                *(range(sys.machines[a].num_states) for a in ancestors)
            ):
                know = set(m.knowledge[src])
                for a, sa in zip(ancestors, combo):
                    know &= sys.machines[a].knowledge[sa]
                if know <= t.guards or not (know & t.guards):
                    continue
                problems.append(
                    f"{subset}: transition {src} -> {dst} on {sorted(label)} is undecided "
                    f"for ancestor states {dict(zip(ancestors, combo))}: "
                    f"possible {sorted(know)} vs guards {sorted(t.guards)}"
                )
    return problems


# ---------------------------------------------------------------------------
# Finite-domain instance product


def instantiate(name: str, params: tuple[str, ...], mu: dict[str, str]) -> str:
    if not params:
        return name
    return f"{name}[{','.join(mu[p] for p in params)}]"


@dataclass
class InstanceProduct:
    sys: SplitSystem
    domain: tuple[str, ...]
    parameters: tuple[str, ...]
    states: list[tuple]  # composite states, BFS order
    initial: int
    transitions: list[Transition]  # labels over instantiated propositions


def build_instance_product(
    sys: SplitSystem, parameters: tuple[str, ...], domain, state_cap: int = 200_000
) -> InstanceProduct:
    """Explicit product of the split machines over a finite parameter domain.

    A composite state maps, per subset machine, every instantiated
    parameter tuple to a local state.  Each transition lets exactly one
    instance progress; all other instances see self-updates only.
    """
    domain = tuple(domain)
    table = sys.table
    subsets = sys.subsets()
    mus = [
        dict(zip(parameters, values))
        for values in itertools.product(domain, repeat=len(parameters))
    ]
    keys = {
        subset: sorted({tuple(mu[p] for p in subset) for mu in mus})
        for subset in subsets
    }
    self_updates = [
        (p.name, p.params) for p in table.self_updates
    ]

    initial = tuple(
        tuple(sys.machines[subset].initial for _ in keys[subset]) for subset in subsets
    )
    ids = {initial: 0}
    order = [initial]
    transitions: list[Transition] = []
    frontier = [initial]
    while frontier:
        state = frontier.pop(0)
        sid = ids[state]
        for mu in mus:
            for si, subset in enumerate(subsets):
                m = sys.machines[subset]
                key = tuple(mu[p] for p in subset)
                slot = keys[subset].index(key)
                local = state[si][slot]
                ancestors = [s for s in subsets if set(s) <= set(subset)]
                know_base = set(m.knowledge[local])
                for a in ancestors:
                    ai = subsets.index(a)
                    a_key = tuple(mu[p] for p in a)
                    a_slot = keys[a].index(a_key)
                    know_base &= sys.machines[a].knowledge[state[ai][a_slot]]
                for t in m.successors(local):
                    if not know_base <= t.guards:
                        continue
                    label = set()
                    for name in t.label:
                        label.add(instantiate(name, table.get(name).params, mu))
                    for name, params in self_updates:
                        own = instantiate(name, params, mu)
                        for values in itertools.product(domain, repeat=len(params)):
                            other = (
                                f"{name}[{','.join(values)}]" if params else name
                            )
                            if other != own:
                                label.add(other)
                    new_state = list(state)
                    row = list(new_state[si])
                    row[slot] = t.dst
                    new_state[si] = tuple(row)
                    new_state = tuple(new_state)
                    tid = ids.get(new_state)
                    if tid is None:
                        if len(ids) >= state_cap:
                            raise SpecError(f"instance-product cap {state_cap} exceeded")
                        tid = len(ids)
                        ids[new_state] = tid
                        order.append(new_state)
                        frontier.append(new_state)
                    transitions.append(Transition(sid, frozenset(label), tid))
    return InstanceProduct(sys, domain, parameters, order, 0, sorted(set(transitions)))


def check_smart_contract(product: InstanceProduct) -> list[str]:
    """Basic sanity of the product: one call per step, every instance live.

    Checks that each transition carries exactly one instantiated method
    call and that in every reachable state every instance has at least one
    enabled transition.
    """
    table = product.sys.table
    call_names = {
        instantiate(p.name, p.params, mu)
        for p in table.calls
        for mu in _all_mus(product)
    }
    problems = []
    by_src: dict[int, list[Transition]] = {}
    for t in product.transitions:
        by_src.setdefault(t.src, []).append(t)
        calls = t.label & call_names
        if len(calls) != 1:
            problems.append(f"transition {t.src}->{t.dst} has calls {sorted(calls)}")
    for sid in range(len(product.states)):
        for mu in _all_mus(product):
            mu_calls = {
                instantiate(p.name, p.params, mu) for p in table.calls
            }
            if not any(t.label & mu_calls for t in by_src.get(sid, [])):
                problems.append(f"state {sid}: instance {mu} cannot progress")
    return problems


def _all_mus(product: InstanceProduct):
    return [
        dict(zip(product.parameters, values))
        for values in itertools.product(product.domain, repeat=len(product.parameters))
    ]


# ---------------------------------------------------------------------------
# Bounded trace-equivalence oracle (finite-domain correctness check)


def project_label(label: frozenset, table, mu: dict[str, str]):
    """Restriction of an instantiated label to one instance's propositions.

    Returns (projected label, is epsilon): the step disappears from the
    instance's trace when it carries neither a call of the instance nor a
    non-self update of one of its cells.
    """
    mu_names = {}
    for p in table:
        mu_names[instantiate(p.name, p.params, mu)] = p
    step = {name for name in label if name in mu_names}
    has_call = any(mu_names[n].is_call for n in step)
    outputs = {n for n in step if mu_names[n].role == "output"}
    non_self = {n for n in outputs if not mu_names[n].is_self_update}
    eps = not has_call and not non_self
    plain = frozenset(mu_names[n].name for n in step)
    return plain, eps


def instance_view(product: InstanceProduct, mu: dict[str, str]):
    """Transitions of the product as seen by one instance (with epsilons)."""
    table = product.sys.table
    out = []
    for t in product.transitions:
        plain, eps = project_label(t.label, table, mu)
        out.append((t.src, None if eps else plain, t.dst))
    return out


def original_view(machine: MealyMachine):
    return [(t.src, t.label, t.dst) for t in machine.transitions]


def bounded_equivalence(
    left, left_init: int, right, right_init: int, depth: int
):
    """Compare the bounded prefix languages of two label-graphs.

    `left`/`right` are (src, label-or-None, dst) lists; None marks an
    epsilon edge.  Returns None on agreement up to `depth`, else a witness
    (trace, symbol, side) where `side` names the graph that has the extra
    continuation.
    """

    def closure(edges, states):
        by_src = {}
        for s, a, d in edges:
            if a is None:
                by_src.setdefault(s, []).append(d)
        out = set(states)
        frontier = list(states)
        while frontier:
            s = frontier.pop()
            for d in by_src.get(s, []):
                if d not in out:
                    out.add(d)
                    frontier.append(d)
        return frozenset(out)

    def moves(edges, states):
        out = {}
        for s, a, d in edges:
            if a is not None and s in states:
                out.setdefault(a, set()).add(d)
        return out

    start = (closure(left, {left_init}), closure(right, {right_init}))
    seen = {start}
    frontier = [(start, [])]
    while frontier:
        (ls, rs), trace = frontier.pop(0)
        if len(trace) >= depth:
            continue
        lm = moves(left, ls)
        rm = moves(right, rs)
        for a in sorted(set(lm) | set(rm), key=sorted):
            if a not in rm:
                return (trace, a, "left")
            if a not in lm:
                return (trace, a, "right")
            nxt = (closure(left, lm[a]), closure(right, rm[a]))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append((nxt, trace + [a]))
    return None


def check_product_equivalence(
    product: InstanceProduct, machine: MealyMachine, depth: int = 5
):
    """Per instance, the product's projected traces must match the
    single-instance machine's traces up to the given depth.

    Returns a dict of witnesses keyed by the instance assignment (empty
    means the bounded check passed).
    """
    witnesses = {}
    for mu in _all_mus(product):
        view = instance_view(product, mu)
        w = bounded_equivalence(
            view, product.initial, original_view(machine), machine.initial, depth
        )
        if w is not None:
            witnesses[tuple(sorted(mu.items()))] = w
    return witnesses
