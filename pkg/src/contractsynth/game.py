"""Symbolic safety game for past-time propositional formulas.

The automaton state is the valuation of all temporal subformulas at the
previous position; evaluating the formula at the current position only
needs those registers plus the current inputs and outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import bdd
from .bdd import FALSE, TRUE, Manager
from .errors import CapExceeded, Unrealizable
from .formulas import (
    And,
    Equiv,
    FalseF,
    Formula,
    Historically,
    Implies,
    Not,
    Once,
    Or,
    Prop,
    Since,
    TrueF,
    WeakYesterday,
    Yesterday,
    TRUE as F_TRUE,
)
from .ltl import PropositionTable
from .machine import MealyMachine, Transition

_TEMPORAL = (Yesterday, WeakYesterday, Since, Once, Historically)

_REG_INIT = {
    Yesterday: False,
    WeakYesterday: True,
    Since: False,
    Once: False,
    Historically: True,
}


def temporal_subformulas(formula: Formula, out: list[Formula] | None = None) -> list[Formula]:
    """Temporal subformulas in post-order, deduplicated."""
    if out is None:
        out = []
    from .formulas import children

    for child in children(formula):
        temporal_subformulas(child, out)
    if isinstance(formula, _TEMPORAL) and formula not in out:
        out.append(formula)
    return out


@dataclass
class SymbolicSafetyGame:
    mgr: Manager
    table: PropositionTable
    inputs: list[str]
    outputs: list[str]
    input_var: dict[str, int]
    output_var: dict[str, int]
    registers: list[Formula]
    reg_var: dict[Formula, int]
    primed_var: dict[Formula, int]
    next_fn: dict[Formula, int]
    init: dict[Formula, bool]
    safe: int
    env: int

    @property
    def input_vars(self) -> list[int]:
        return [self.input_var[n] for n in self.inputs]

    @property
    def output_vars(self) -> list[int]:
        return [self.output_var[n] for n in self.outputs]

    @property
    def reg_vars(self) -> list[int]:
        return [self.reg_var[r] for r in self.registers]

    def transition_relation(self) -> int:
        """Monolithic relation over (state, inputs, outputs, primed state)."""
        mgr = self.mgr
        rel = TRUE
        for reg in self.registers:
            rel = mgr.and_(rel, mgr.iff(mgr.var(self.primed_var[reg]), self.next_fn[reg]))
        return rel

    def initial_assignment(self) -> dict[int, bool]:
        return {self.reg_var[r]: self.init[r] for r in self.registers}

    def initial_state(self) -> tuple[bool, ...]:
        return tuple(self.init[r] for r in self.registers)

    def step(self, state: tuple[bool, ...], label) -> tuple[bool, ...]:
        """Advance registers for one trace step; label is the set of true props."""
        assignment = self._assignment(state, label)
        return tuple(self.mgr.evaluate(self.next_fn[r], assignment) for r in self.registers)

    def is_safe(self, state: tuple[bool, ...], label) -> bool:
        return self.mgr.evaluate(self.safe, self._assignment(state, label))

    def accepts_prefix(self, trace) -> bool:
        """Prefix acceptance: the formula holds at every position of the trace."""
        state = self.initial_state()
        for label in trace:
            if not self.is_safe(state, label):
                return False
            state = self.step(state, label)
        return True

    def _assignment(self, state: tuple[bool, ...], label) -> dict[int, bool]:
        assignment = {self.reg_var[r]: v for r, v in zip(self.registers, state)}
        for name, var in self.input_var.items():
            assignment[var] = name in label
        for name, var in self.output_var.items():
            assignment[var] = name in label
        return assignment


def build_game(
    formula: Formula,
    table: PropositionTable,
    environment: Formula = F_TRUE,
    var_cap: int = 4096,
) -> SymbolicSafetyGame:
    """Compile the per-position formula into a symbolic safety game.

    `environment` is the current-step assumption/requirement constraint; it
    restricts which inputs are depicted during machine extraction.
    """
    mgr = Manager(var_cap=var_cap)
    inputs = sorted(p.name for p in table.inputs)
    outputs = sorted(p.name for p in table.outputs)
    input_var = {n: mgr.new_var() for n in inputs}
    output_var = {n: mgr.new_var() for n in outputs}

    registers = temporal_subformulas(formula)
    registers = temporal_subformulas(environment, registers)
    reg_var: dict[Formula, int] = {}
    primed_var: dict[Formula, int] = {}
    for reg in registers:
        reg_var[reg] = mgr.new_var()
        primed_var[reg] = mgr.new_var()

    memo: dict[Formula, int] = {}

    def ev(f: Formula) -> int:
        out = memo.get(f)
        if out is not None:
            return out
        if isinstance(f, TrueF):
            out = TRUE
        elif isinstance(f, FalseF):
            out = FALSE
        elif isinstance(f, Prop):
            var = input_var.get(f.name)
            if var is None:
                var = output_var.get(f.name)
            if var is None:
                raise KeyError(f"proposition {f.name!r} missing from the table")
            out = mgr.var(var)
        elif isinstance(f, Not):
            out = mgr.not_(ev(f.arg))
        elif isinstance(f, And):
            out = mgr.and_(ev(f.left), ev(f.right))
        elif isinstance(f, Or):
            out = mgr.or_(ev(f.left), ev(f.right))
        elif isinstance(f, Implies):
            out = mgr.implies(ev(f.left), ev(f.right))
        elif isinstance(f, Equiv):
            out = mgr.iff(ev(f.left), ev(f.right))
        elif isinstance(f, (Yesterday, WeakYesterday)):
            out = mgr.var(reg_var[f])
        elif isinstance(f, Since):
            out = mgr.or_(ev(f.right), mgr.and_(ev(f.left), mgr.var(reg_var[f])))
        elif isinstance(f, Once):
            out = mgr.or_(ev(f.arg), mgr.var(reg_var[f]))
        elif isinstance(f, Historically):
            out = mgr.and_(ev(f.arg), mgr.var(reg_var[f]))
        else:
            raise TypeError(f"not a propositional formula: {f!r}")
        memo[f] = out
        return out

    next_fn: dict[Formula, int] = {}
    for reg in registers:
        if isinstance(reg, (Yesterday, WeakYesterday)):
            next_fn[reg] = ev(reg.arg)
        else:
            next_fn[reg] = ev(reg)

    init = {reg: _REG_INIT[type(reg)] for reg in registers}
    return SymbolicSafetyGame(
        mgr,
        table,
        inputs,
        outputs,
        input_var,
        output_var,
        registers,
        reg_var,
        primed_var,
        next_fn,
        init,
        ev(formula),
        ev(environment),
    )


def winning_region(game: SymbolicSafetyGame) -> int:
    """Greatest fixpoint of states from which the system can stay safe forever.

    Returns a diagram over the register variables; empty (FALSE) means the
    initial state lost.  The caller decides whether that is an error.
    """
    mgr = game.mgr
    substitution = {game.reg_var[r]: game.next_fn[r] for r in game.registers}
    in_vars = game.input_vars
    out_vars = game.output_vars
    region = TRUE
    while True:
        succ_in_region = mgr.compose(region, substitution)
        good = mgr.and_(game.safe, succ_in_region)
        new_region = mgr.forall(mgr.exists(good, out_vars), in_vars)
        if new_region == region:
            break
        region = new_region
    if not mgr.evaluate(region, game.initial_assignment()):
        return FALSE
    return region


@dataclass
class ExtractionResult:
    machine: MealyMachine
    state_valuations: list[tuple[bool, ...]]


def extract_machine(
    game: SymbolicSafetyGame, region: int, state_cap: int = 100_000
) -> ExtractionResult:
    """Explicit reachable machine of the winning region.

    Transitions are restricted to environment-allowed inputs; all winning
    output choices are retained so free choices stay analyzable.
    """
    if region == FALSE:
        raise Unrealizable("winning region is empty")
    mgr = game.mgr
    if not mgr.evaluate(region, game.initial_assignment()):
        raise Unrealizable("initial state is not in the winning region")

    substitution = {game.reg_var[r]: game.next_fn[r] for r in game.registers}
    region_next = mgr.compose(region, substitution)
    good = mgr.conj([game.safe, game.env, region_next])
    io_vars = sorted(game.input_vars + game.output_vars)
    var_name = {v: n for n, v in game.input_var.items()}
    var_name.update({v: n for n, v in game.output_var.items()})

    init = game.initial_state()
    ids: dict[tuple[bool, ...], int] = {init: 0}
    order = [init]
    transitions: list[Transition] = []
    frontier = [init]
    while frontier:
        state = frontier.pop(0)
        sid = ids[state]
        reg_assignment = {game.reg_var[r]: v for r, v in zip(game.registers, state)}
        local = mgr.restrict(good, reg_assignment)
        for assignment in mgr.sat_iter(local, io_vars):
            label = frozenset(var_name[v] for v, val in assignment.items() if val)
            full = dict(reg_assignment)
            full.update(assignment)
            nxt = tuple(mgr.evaluate(game.next_fn[r], full) for r in game.registers)
            tid = ids.get(nxt)
            if tid is None:
                if len(ids) >= state_cap:
                    raise CapExceeded(f"explicit-state cap {state_cap} exceeded")
                tid = len(ids)
                ids[nxt] = tid
                order.append(nxt)
                frontier.append(nxt)
            transitions.append(Transition(sid, label, tid))

    machine = MealyMachine(
        num_states=len(order),
        initial=0,
        transitions=sorted(transitions),
        inputs=tuple(game.inputs),
        outputs=tuple(game.outputs),
        table=game.table,
    )
    return ExtractionResult(machine, order)


def closure_violations(game: SymbolicSafetyGame, result: ExtractionResult) -> list[tuple[int, frozenset]]:
    """States lacking a region successor for some allowed input valuation.

    Empty on a correctly extracted winning region.
    """
    mgr = game.mgr
    machine = result.machine
    by_state: dict[int, set[frozenset]] = {}
    for t in machine.transitions:
        by_state.setdefault(t.src, set()).add(t.label & set(machine.inputs))
    violations = []
    in_vars = sorted(game.input_vars)
    var_name = {v: n for n, v in game.input_var.items()}
    for sid, regs in enumerate(result.state_valuations):
        reg_assignment = {game.reg_var[r]: v for r, v in zip(game.registers, regs)}
        allowed = mgr.exists(mgr.restrict(game.env, reg_assignment), game.output_vars)
        for assignment in mgr.sat_iter(allowed, in_vars):
            inputs = frozenset(var_name[v] for v, val in assignment.items() if val)
            if inputs not in by_state.get(sid, set()):
                violations.append((sid, inputs))
    return violations
