"""Propositional approximation of contract specifications.

Predicate and update terms are replaced by unique atomic propositions and
every cell is constrained to take exactly one update per step.  Also hosts
the reference trace-evaluation oracle used by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import terms as T
from .errors import SpecError
from .formulas import (
    And,
    Equiv,
    FalseF,
    Formula,
    Historically,
    Implies,
    MethodCall,
    Not,
    Once,
    Or,
    Predicate,
    Prop,
    Since,
    TrueF,
    Update,
    WeakYesterday,
    Yesterday,
    conj,
    disj,
    map_atoms,
    term_source,
    TRUE,
)
from .frontend import (
    PastTslSpec,
    assemble_global_formula,
    desugar,
    environment_constraint,
)
from .terms import PredicateTerm, UpdateTerm, term_slug

INPUT = "input"
OUTPUT = "output"


@dataclass(frozen=True)
class Proposition:
    name: str
    role: str  # input | output
    origin: object  # PredicateTerm | UpdateTerm | str (raw output)
    params: tuple[str, ...] = ()
    is_call: bool = False
    method: str | None = None
    cell: str | None = None
    is_self_update: bool = False
    display: str = ""


class PropositionTable:
    """Injective, deterministic map from term origins to propositions."""

    def __init__(self):
        self._by_origin: dict[object, Proposition] = {}
        self._by_name: dict[str, Proposition] = {}

    def __len__(self):
        return len(self._by_origin)

    def __iter__(self):
        return iter(self._by_name.values())

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> Proposition:
        return self._by_name[name]

    def intern(self, origin, make) -> Proposition:
        if origin in self._by_origin:
            return self._by_origin[origin]
        prop = make()
        if prop.name in self._by_name:
            raise SpecError(
                f"proposition name collision: {prop.name!r} for two distinct origins"
            )
        self._by_origin[origin] = prop
        self._by_name[prop.name] = prop
        return prop

    @property
    def inputs(self) -> list[Proposition]:
        return [p for p in self._by_name.values() if p.role == INPUT]

    @property
    def outputs(self) -> list[Proposition]:
        return [p for p in self._by_name.values() if p.role == OUTPUT]

    @property
    def calls(self) -> list[Proposition]:
        return [p for p in self._by_name.values() if p.is_call]

    @property
    def self_updates(self) -> list[Proposition]:
        return [p for p in self._by_name.values() if p.is_self_update]

    def params_of(self, name: str) -> tuple[str, ...]:
        return self._by_name[name].params

    def export_text(self) -> str:
        """Deterministic sorted listing, for golden tests."""
        lines = []
        for prop in sorted(self._by_name.values(), key=lambda p: p.name):
            flags = []
            if prop.is_call:
                flags.append("call")
            if prop.is_self_update:
                flags.append("self-update")
            params = f"({', '.join(prop.params)})" if prop.params else ""
            lines.append(
                f"{prop.name}{params} [{prop.role}{' ' + ' '.join(flags) if flags else ''}] := {prop.display}"
            )
        return "\n".join(lines) + "\n"


def _call_methods(decls) -> dict[str, str]:
    """Desugared call-predicate symbol -> method name."""
    return {sym: m for m, sym in decls.call_symbols.items()}


def syntactic_conversion(
    formula: Formula, decls, table: PropositionTable | None = None
) -> tuple[Formula, PropositionTable]:
    """Replace predicate/update leaves with unique atomic propositions."""
    if table is None:
        table = PropositionTable()
    call_syms = _call_methods(decls)
    raw_outputs = getattr(decls, "outputs", set())

    def convert(atom):
        if isinstance(atom, Prop):
            return atom
        if isinstance(atom, MethodCall):
            raise SpecError("method-call sugar survived desugaring")
        if isinstance(atom, Predicate):
            term = atom.term
            if term.symbol in raw_outputs and not term.args:
                prop = table.intern(
                    term,
                    lambda: Proposition(term.symbol, OUTPUT, term, display=term.symbol),
                )
                return Prop(prop.name)
            method = call_syms.get(term.symbol)
            prop = table.intern(
                term,
                lambda: Proposition(
                    term_slug(term),
                    INPUT,
                    term,
                    params=term.parameters(),
                    is_call=method is not None,
                    method=method,
                    display=_display(term, method),
                ),
            )
            return Prop(prop.name)
        if isinstance(atom, Update):
            term = atom.term
            prop = table.intern(
                term,
                lambda: Proposition(
                    term_slug(term),
                    OUTPUT,
                    term,
                    params=term.parameters(),
                    cell=term.target.symbol,
                    is_self_update=term.is_self_update,
                    display=term_source(term),
                ),
            )
            return Prop(prop.name)
        return atom

    return map_atoms(formula, convert), table


def _display(term: PredicateTerm, method: str | None) -> str:
    if method is not None:
        params = [a.symbol for a in term.args[1:]]
        return f"{method}({', '.join(params)})" if params else method
    return term_source(term)


def cell_updates(decls, table: PropositionTable) -> Formula:
    """Exactly-one update proposition per declared cell, per step.

    Cells whose self-update is never mentioned in the specification get an implicit
    self-update proposition so the constraint is total.
    """
    constraints = []
    for name in sorted(decls.cells):
        cell_params = decls.cells[name]
        target = T.cell(name, *(T.param(p) for p in cell_params))
        self_term = UpdateTerm(target, target)
        table.intern(
            self_term,
            lambda: Proposition(
                term_slug(self_term),
                OUTPUT,
                self_term,
                params=self_term.parameters(),
                cell=name,
                is_self_update=True,
                display=term_source(self_term),
            ),
        )
        updates = sorted(
            (p for p in table if p.cell == name), key=lambda p: p.name
        )
        props = [Prop(p.name) for p in updates]
        at_least_one = disj(props)
        at_most_one = conj(
            Not(And(props[i], props[j]))
            for i in range(len(props))
            for j in range(i + 1, len(props))
        )
        constraints.append(And(at_least_one, at_most_one))
    return conj(constraints)


@dataclass
class Approximation:
    """Result of lowering a contract spec to the propositional level."""

    formula: Formula  # must hold at every trace position
    environment: Formula  # current-step assumption/requirement constraint
    table: PropositionTable
    spec: PastTslSpec


def approximate(spec: PastTslSpec) -> Approximation:
    """syntacticConversion + cellUpdates over the assembled global formula."""
    spec = desugar(spec)
    table = PropositionTable()
    converted, table = syntactic_conversion(assemble_global_formula(spec), spec.declarations, table)
    env, table = syntactic_conversion(environment_constraint(spec), spec.declarations, table)
    updates = cell_updates(spec.declarations, table)
    return Approximation(And(converted, updates), env, table, spec)


# ---------------------------------------------------------------------------
# Reference trace oracle


Trace = list  # sequence of frozenset[str] / set[str]


def eval_trace(formula: Formula, trace, position: int) -> bool:
    """Recursive past-time semantics over a finite trace of proposition sets.

    Yesterday is false at position 0, weak yesterday true.
    """
    if not 0 <= position < len(trace):
        raise IndexError(f"position {position} outside trace of length {len(trace)}")
    memo: dict[tuple[Formula, int], bool] = {}

    def ev(f: Formula, i: int) -> bool:
        key = (f, i)
        if key in memo:
            return memo[key]
        if isinstance(f, TrueF):
            v = True
        elif isinstance(f, FalseF):
            v = False
        elif isinstance(f, Prop):
            v = f.name in trace[i]
        elif isinstance(f, Not):
            v = not ev(f.arg, i)
        elif isinstance(f, And):
            v = ev(f.left, i) and ev(f.right, i)
        elif isinstance(f, Or):
            v = ev(f.left, i) or ev(f.right, i)
        elif isinstance(f, Implies):
            v = (not ev(f.left, i)) or ev(f.right, i)
        elif isinstance(f, Equiv):
            v = ev(f.left, i) == ev(f.right, i)
        elif isinstance(f, Yesterday):
            v = i > 0 and ev(f.arg, i - 1)
        elif isinstance(f, WeakYesterday):
            v = i == 0 or ev(f.arg, i - 1)
        elif isinstance(f, Since):
            v = any(
                ev(f.right, t) and all(ev(f.left, k) for k in range(t + 1, i + 1))
                for t in range(i + 1)
            )
        elif isinstance(f, Once):
            v = any(ev(f.arg, t) for t in range(i + 1))
        elif isinstance(f, Historically):
            v = all(ev(f.arg, t) for t in range(i + 1))
        else:
            raise TypeError(f"not a propositional formula: {f!r}")
        memo[key] = v
        return v

    return ev(formula, position)
