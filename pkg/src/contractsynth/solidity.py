"""Solidity code generation from (split) state machines.

The emitted contract realizes the control flow: one enum and one
current-state slot per parameter subset (a nested mapping when the subset
is nonempty), one function per method containing an if/else dispatch over
the source state, predicate guards and knowledge conditions, the field
updates of the obligations, and a reverting default branch.  A reentrancy
flag brackets every method body.

Knowledge conditions are compiled to constant disjunctions over the
ancestor machines' states: the independence check guarantees that each
combination gives a definite verdict, so no runtime set intersection is
needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import bdd
from . import terms as T
from .errors import IndependenceFailure, SpecError
from .machine import detect_free_choices
from .signatures import (
    BUILTIN_FUNCTIONS,
    BUILTIN_PREDICATES,
    MethodSignature,
    SignatureConfig,
    check_against,
)
from .split import SplitSystem, call_of, split
from .terms import FunctionTerm, PredicateTerm, UpdateTerm

PRAGMA = "pragma solidity ^0.8.19;"

_COMPARISON_OPS = {"eq": "==", "ge": ">=", "gt": ">", "le": "<=", "lt": "<"}
_ARITH_OPS = {"add": "+", "sub": "-"}


@dataclass
class EmittedContract:
    source: str
    manifest: dict

    def manifest_json(self) -> str:
        return json.dumps(self.manifest, indent=2, sort_keys=True)


def _subset_suffix(subset: tuple[str, ...]) -> str:
    return "".join(f"_{p}" for p in subset)


def _enum_name(subset) -> str:
    return "State" + _subset_suffix(subset)


def _state_var(subset) -> str:
    return "currState" + _subset_suffix(subset)


class _RenderContext:
    def __init__(self, cfg: SignatureConfig, method: MethodSignature | None):
        self.cfg = cfg
        self.method = method

    def parameter(self, name: str) -> str:
        if self.method is None:
            raise SpecError(f"parameter {name!r} used outside a method context")
        return self.method.binding(name)


def render_term(term: FunctionTerm, ctx: _RenderContext) -> str:
    if term.kind == T.INPUT:
        if term.symbol == "sender":
            return "msg.sender"
        if term.symbol == "time":
            return "block.timestamp"
        if term.symbol.startswith("arg@"):
            return "_" + term.symbol[4:]
        return term.symbol
    if term.kind == T.CONSTANT:
        return term.symbol
    if term.kind == T.PARAMETER:
        return ctx.parameter(term.symbol)
    if term.kind == T.CELL:
        out = term.symbol
        for arg in term.args:
            out += f"[{render_term(arg, ctx)}]"
        return out
    if term.kind == T.APPLICATION:
        sig = ctx.cfg.functions.get(term.symbol)
        if sig is not None:
            if sig.kind != "expression":
                raise SpecError(
                    f"function {term.symbol!r} is a statement template, not an expression"
                )
            return _fill(sig, term.args, ctx)
        if term.symbol in _ARITH_OPS:
            a, b = term.args
            return f"({render_term(a, ctx)} {_ARITH_OPS[term.symbol]} {render_term(b, ctx)})"
        raise SpecError(f"no signature or built-in for function {term.symbol!r}")
    raise SpecError(f"cannot render term kind {term.kind!r}")


def render_predicate(term: PredicateTerm, ctx: _RenderContext) -> str:
    op = _COMPARISON_OPS.get(term.symbol)
    if op is not None:
        a, b = term.args
        return f"{render_term(a, ctx)} {op} {render_term(b, ctx)}"
    if term.symbol == "in":
        x, coll = term.args
        return f"{render_term(coll, ctx)}[{render_term(x, ctx)}]"
    if term.symbol == "isTrue":
        return render_term(term.args[0], ctx)
    sig = ctx.cfg.predicates.get(term.symbol)
    if sig is not None:
        if sig.side_effects:
            raise SpecError(f"predicate {term.symbol!r} has side effects, cannot guard")
        return _fill(sig, term.args, ctx)
    raise SpecError(f"no signature or built-in for predicate {term.symbol!r}")


def render_update(term: UpdateTerm, ctx: _RenderContext) -> str:
    source = term.source
    if source.kind == T.APPLICATION:
        sig = ctx.cfg.functions.get(source.symbol)
        if sig is not None and sig.kind == "statement":
            return _fill(sig, source.args, ctx)
    return f"{render_term(term.target, ctx)} = {render_term(source, ctx)};"


def _fill(sig, args, ctx: _RenderContext) -> str:
    if len(args) != len(sig.args):
        raise SpecError(
            f"{sig.name!r} expects {len(sig.args)} argument(s), got {len(args)}"
        )
    values = {name: render_term(a, ctx) for name, a in zip(sig.args, args)}
    try:
        return sig.definition.format(**values)
    except KeyError as exc:
        raise SpecError(f"{sig.name!r} definition uses unknown placeholder {exc}") from exc


# ---------------------------------------------------------------------------
# Knowledge conditions


def _enabled_combos(sys: SplitSystem, subset, transition):
    """Strict-ancestor state combinations under which the move is enabled.

    Raises IndependenceFailure on an undecided combination; emission
    requires a passed independence check.
    """
    import itertools

    ancestors = [s for s in sys.subsets() if set(s) < set(subset)]
    m = sys.machines[subset]
    enabled = []
    for combo in itertools.product(
        *(range(sys.machines[a].num_states) for a in ancestors)
    ):
        know = set(m.knowledge[transition.src])
        for a, sa in zip(ancestors, combo):
            know &= sys.machines[a].knowledge[sa]
        if know <= transition.guards:
            enabled.append(dict(zip(ancestors, combo)))
        elif know & transition.guards:
            raise IndependenceFailure(
                "independence check failed during emission",
                [f"{subset}: {transition.src} -> {transition.dst} with {dict(zip(ancestors, combo))}"],
            )
    return ancestors, enabled


def _knowledge_condition(sys: SplitSystem, ancestors, enabled, ctx) -> str:
    """Render the enabled combinations as a boolean condition."""
    total = 1
    for a in ancestors:
        total *= sys.machines[a].num_states
    if not ancestors or len(enabled) == total:
        return ""
    clauses = []
    for combo in enabled:
        parts = [
            f"{_state_access(sys, a, ctx)} == {_enum_name(a)}.S{s}"
            for a, s in combo.items()
        ]
        clauses.append(" && ".join(parts) if len(parts) == 1 else "(" + " && ".join(parts) + ")")
    if not clauses:
        return "false"
    return clauses[0] if len(clauses) == 1 else "(" + " || ".join(clauses) + ")"


def _state_access(sys: SplitSystem, subset, ctx: _RenderContext) -> str:
    out = _state_var(subset)
    for p in subset:
        out += f"[{ctx.parameter(p)}]"
    return out


# ---------------------------------------------------------------------------
# Emission


def _merge_input_cubes(labels, props):
    mgr = bdd.Manager(num_vars=len(props))
    index = {p: i for i, p in enumerate(props)}
    union = mgr.disj(mgr.cube({index[p]: (p in lab) for p in props}) for lab in labels)
    cubes = []
    for cube in mgr.cube_iter(union, range(len(props))):
        pos = tuple(sorted(props[v] for v, val in cube.items() if val))
        neg = tuple(sorted(props[v] for v, val in cube.items() if not val))
        cubes.append((pos, neg))
    return sorted(cubes)


def emit_contract(system, cfg: SignatureConfig, parameters: tuple[str, ...] = ()) -> EmittedContract:
    """Render a synthesized system as one Solidity contract plus a manifest.

    `system` is either a SplitSystem or an unparameterized MealyMachine
    (which is split trivially).  Free choices must have been resolved.
    """
    if not isinstance(system, SplitSystem):
        free = detect_free_choices(system)
        if free:
            raise SpecError(
                f"{len(free)} unresolved free choice(s); resolve before emission"
            )
        system = split(system, parameters)
    sys = system
    table = sys.table
    decls_methods = {}
    for t in sys.original.transitions:
        call = call_of(sys.original, t.label)
        prop = table.get(call)
        decls_methods[prop.method] = prop.params
    for name in cfg.methods:
        decls_methods.setdefault(name, tuple(p for p, _ in cfg.methods[name].params))

    method_sections = []
    manifest_methods = {}
    input_props = sorted(
        p.name for p in table.inputs if not p.is_call
    )
    for name in sorted(decls_methods):
        sig = cfg.methods.get(name)
        if sig is None:
            raise SpecError(f"missing method signature for {name!r}")
        section, entry = _emit_method(sys, cfg, name, sig, input_props)
        method_sections.append(section)
        manifest_methods[name] = entry

    ctx0 = _RenderContext(cfg, None)
    lines = ["// SPDX-License-Identifier: UNLICENSED", PRAGMA, "", f"contract {cfg.contract} {{"]
    lines.append("    // state machine states")
    for subset in sys.subsets():
        members = ", ".join(f"S{i}" for i in range(sys.machines[subset].num_states))
        lines.append(f"    enum {_enum_name(subset)} {{ {members} }}")
    lines.append("    // current state")
    for subset in sys.subsets():
        m = sys.machines[subset]
        if not subset:
            lines.append(
                f"    {_enum_name(subset)} private {_state_var(subset)} = {_enum_name(subset)}.S{m.initial};"
            )
        else:
            if m.initial != 0:
                raise SpecError("mapping-stored machines need initial state 0")
            typ = _enum_name(subset)
            for p in reversed(subset):
                typ = f"mapping({_param_type(cfg, p)} => {typ})"
            lines.append(f"    {typ} private {_state_var(subset)};")
    if cfg.constants:
        lines.append("    // constants")
        for name in sorted(cfg.constants):
            c = cfg.constants[name]
            lines.append(f"    {c.type} private immutable {name};")
    if cfg.cells:
        lines.append("    // fields")
        for name in sorted(cfg.cells):
            c = cfg.cells[name]
            typ = c.type
            for p in reversed(c.params):
                typ = f"mapping({_param_type(cfg, p)} => {typ})"
            location = f" {c.location}" if c.location else ""
            lines.append(f"    {typ} {c.visibility}{location} {name};")
    lines.append("    bool private inMethod = false;")
    lines.append("    constructor() {")
    for name in sorted(cfg.constants):
        lines.append(f"        {name} = {cfg.constants[name].value};")
    lines.append("    }")
    for section in method_sections:
        lines.append("")
        lines.extend(section)
    lines.append("}")

    manifest = {
        "contract": cfg.contract,
        "parameters": list(parameters),
        "subsets": {
            _subset_suffix(s) or "": {
                "params": list(s),
                "states": sys.machines[s].num_states,
                "initial": sys.machines[s].initial,
                "knowledge": [sorted(k) for k in sys.machines[s].knowledge],
            }
            for s in sys.subsets()
        },
        "methods": manifest_methods,
    }
    return EmittedContract("\n".join(lines) + "\n", manifest)


def _param_type(cfg: SignatureConfig, param: str) -> str:
    try:
        return cfg.parameters[param]
    except KeyError:
        raise SpecError(f"missing type for parameter {param!r}") from None


def _emit_method(sys: SplitSystem, cfg, name, sig: MethodSignature, input_props):
    table = sys.table
    ctx = _RenderContext(cfg, sig)
    subset = tuple(p for p, _ in sig.params)
    machine = sys.machines.get(subset)

    # Collect this method's transitions from its owning subset machine.
    rows = []
    if machine is not None:
        for t in machine.transitions:
            call = call_of(sys.original, t.label)
            if table.get(call).method != name:
                continue
            ancestors, enabled = _enabled_combos(sys, subset, t)
            outputs = tuple(
                sorted(n for n in t.label if table.get(n).role == "output")
            )
            rows.append((t, ancestors, tuple(sorted(map(tuple, (c.items() for c in enabled)))), outputs, enabled))

    # Merge input cubes for rows that share everything but the predicates.
    groups = {}
    for t, ancestors, combo_key, outputs, enabled in rows:
        key = (t.src, t.dst, outputs, combo_key)
        groups.setdefault(key, (ancestors, enabled, []))[2].append(
            frozenset(n for n in t.label if n in set(input_props))
        )
    branches = []
    entry_transitions = []
    for (src, dst, outputs, _), (ancestors, enabled, labels) in sorted(
        groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])
    ):
        for pos, neg in _merge_input_cubes(labels, input_props):
            conds = [f"{_state_access(sys, subset, ctx)} == {_enum_name(subset)}.S{src}"]
            for n in pos:
                conds.append(render_predicate(table.get(n).origin, ctx))
            for n in neg:
                conds.append(f"!({render_predicate(table.get(n).origin, ctx)})")
            know = _knowledge_condition(sys, ancestors, enabled, ctx)
            if know:
                conds.append(know)
            body = [f"{_state_access(sys, subset, ctx)} = {_enum_name(subset)}.S{dst};"]
            for n in outputs:
                prop = table.get(n)
                if not prop.is_self_update:
                    body.append(render_update(prop.origin, ctx))
            branches.append((" && ".join(conds), body))
            entry_transitions.append(
                {
                    "src": src,
                    "dst": dst,
                    "pos": list(pos),
                    "neg": list(neg),
                    "knowledge": [
                        {_subset_suffix(a) or "": s for a, s in combo.items()}
                        for combo in enabled
                    ],
                    "updates": [n for n in outputs if not table.get(n).is_self_update],
                }
            )

    args = [f"{_param_type(cfg, p)} _{p}" for p, fixed in sig.params if fixed is None]
    args += [f"{typ} _{arg}" for arg, typ in sig.args]
    payable = " payable" if sig.payable else ""
    lines = [f"    function {name}({', '.join(args)}) public{payable} {{"]
    lines.append("        require(! inMethod);")
    lines.append("        inMethod = true;")
    if not branches:
        lines.append("        revert();")
    else:
        for i, (cond, body) in enumerate(branches):
            head = "if" if i == 0 else "} else if"
            lines.append(f"        {head} ({cond}) {{")
            for stmt in body:
                lines.append(f"            {stmt}")
        lines.append("        } else {")
        lines.append("            revert();")
        lines.append("        }")
    lines.append("        inMethod = false;")
    lines.append("    }")
    entry = {
        "subset": _subset_suffix(subset) or "",
        "params": [[p, fixed] for p, fixed in sig.params],
        "transitions": entry_transitions,
    }
    return lines, entry
