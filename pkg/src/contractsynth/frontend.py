"""Parser and desugaring for the textual contract-specification language.

File format: UTF-8 text, one formula per line.  Declaration sections come
first, then the formula sections ``#assume``, ``#require``, ``#obligation``.
A top-level ``G(...)`` formula is an invariant, a bare formula an initial
condition.  See docs/spec-language.md for the full grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

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
    Since,
    TrueF,
    Update,
    WeakYesterday,
    Yesterday,
    atoms,
    conj,
    map_atoms,
    to_source,
    FALSE,
    TRUE,
)
from .terms import FunctionTerm, PredicateTerm, UpdateTerm


@dataclass
class Declarations:
    """Identifier environment of one specification."""

    methods: dict[str, tuple[str, ...]] = field(default_factory=dict)
    cells: dict[str, tuple[str, ...]] = field(default_factory=dict)
    inputs: set[str] = field(default_factory=set)
    constants: set[str] = field(default_factory=set)
    functions: set[str] = field(default_factory=set)
    predicates: set[str] = field(default_factory=set)
    # Raw output propositions, for toy specs stated directly at the
    # propositional level (no cell/update machinery behind them).
    outputs: set[str] = field(default_factory=set)

    def copy(self) -> "Declarations":
        return Declarations(
            dict(self.methods),
            dict(self.cells),
            set(self.inputs),
            set(self.constants),
            set(self.functions),
            set(self.predicates),
            set(self.outputs),
        )

    @property
    def call_symbols(self) -> dict[str, str]:
        """Desugared predicate symbol for each declared method."""
        return {m: "is" + m[0].upper() + m[1:] for m in self.methods}


@dataclass
class PastTslSpec:
    parameters: tuple[str, ...]
    assumptions_init: list[Formula]
    assumptions_inv: list[Formula]
    requirements_init: list[Formula]
    requirements_inv: list[Formula]
    obligations_init: list[Formula]
    obligations_inv: list[Formula]
    declarations: Declarations
    desugared: bool = False

    def formula_lists(self):
        return [
            ("assumptions_init", self.assumptions_init),
            ("assumptions_inv", self.assumptions_inv),
            ("requirements_init", self.requirements_init),
            ("requirements_inv", self.requirements_inv),
            ("obligations_init", self.obligations_init),
            ("obligations_inv", self.obligations_inv),
        ]

    def all_formulas(self):
        for _, lst in self.formula_lists():
            yield from lst


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lupdate>\[\[)
  | (?P<rupdate>\]\])
  | (?P<update_arrow><-(?!>))
  | (?P<op><->|->|&&|\|\||>=|<=|[!()=><+,-])
  | (?P<arg>arg@[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_UNARY = {"Y": Yesterday, "WY": WeakYesterday, "O": Once, "H": Historically}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, line_no: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SpecError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        pos = m.end()
        kind = m.lastgroup
        if kind == "ws":
            continue
        toks.append(_Tok(kind, m.group(), line_no, m.start() + 1))
    return toks


class _FormulaParser:
    def __init__(self, toks: list[_Tok], decls: Declarations, params: tuple[str, ...], line: int):
        self.toks = toks
        self.decls = decls
        self.params = params
        self.line = line
        self.pos = 0

    def error(self, message: str) -> SpecError:
        col = self.toks[self.pos].col if self.pos < len(self.toks) else None
        return SpecError(message, self.line, col)

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self, text: str | None = None) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of formula" + (f", expected {text!r}" if text else ""))
        if text is not None and tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text!r}")
        self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    # formula := equiv
    def parse(self) -> Formula:
        f = self.equiv()
        if self.peek() is not None:
            raise self.error(f"trailing input {self.peek().text!r}")
        return f

    def equiv(self) -> Formula:
        left = self.implies()
        if self.at("<->"):
            self.take()
            return Equiv(left, self.equiv())
        return left

    def implies(self) -> Formula:
        left = self.or_()
        if self.at("->"):
            self.take()
            return Implies(left, self.implies())
        return left

    def or_(self) -> Formula:
        out = self.and_()
        while self.at("||"):
            self.take()
            out = Or(out, self.and_())
        return out

    def and_(self) -> Formula:
        out = self.since()
        while self.at("&&"):
            self.take()
            out = And(out, self.since())
        return out

    def since(self) -> Formula:
        left = self.unary()
        if self.at("S"):
            self.take()
            return Since(left, self.since())
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of formula")
        if tok.text == "!":
            self.take()
            return Not(self.unary())
        if tok.kind == "ident" and tok.text in _UNARY:
            self.take()
            return _UNARY[tok.text](self.unary())
        if tok.kind == "ident" and tok.text in ("X", "F", "U"):
            raise self.error(f"future-time operator {tok.text!r} is not supported")
        if tok.text == "G":
            raise self.error("G may only appear as the outermost invariant marker")
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.text == "(":
            self.take()
            inner = self.equiv()
            self.take(")")
            return inner
        if tok.text == "true":
            self.take()
            return TRUE
        if tok.text == "false":
            self.take()
            return FALSE
        if tok.kind == "lupdate":
            return self.update()
        return self.comparison()

    def update(self) -> Formula:
        self.take("[[")
        target = self.function_term()
        if target.kind != T.CELL:
            raise self.error(f"update target {target.symbol!r} is not a declared cell")
        self.take("<-")
        source = self.function_term()
        self.take("]]")
        return Update(UpdateTerm(target, source))

    def comparison(self) -> Formula:
        left = self.function_term()
        tok = self.peek()
        if tok is not None and tok.text in T.COMPARISONS:
            op = self.take().text
            right = self.function_term()
            return Predicate(PredicateTerm(T.COMPARISONS[op], (left, right)))
        # A bare term at formula level must be a method call or a predicate.
        if left.kind == T.APPLICATION and left.symbol in self.decls.methods:
            params = []
            for arg in left.args:
                if arg.kind != T.PARAMETER:
                    raise self.error(f"method call {left.symbol!r} takes parameters only")
                params.append(arg.symbol)
            declared = self.decls.methods[left.symbol]
            if tuple(params) != declared:
                raise self.error(
                    f"method {left.symbol!r} declared with parameters {declared}, called with {tuple(params)}"
                )
            return MethodCall(left.symbol, tuple(params))
        if left.kind == T.APPLICATION and left.symbol in self.decls.predicates:
            return Predicate(PredicateTerm(left.symbol, left.args))
        if left.kind == T.APPLICATION and left.symbol in self.decls.outputs and not left.args:
            return Predicate(PredicateTerm(left.symbol))
        raise self.error(f"term {left.symbol!r} is not a formula (predicate or method call expected)")

    # fterm := primary (('+'|'-') primary)*
    def function_term(self) -> FunctionTerm:
        out = self.primary()
        while True:
            tok = self.peek()
            if tok is not None and tok.text in T.ARITHMETIC:
                op = self.take().text
                out = T.app(T.ARITHMETIC[op], out, self.primary())
            else:
                return out

    def primary(self) -> FunctionTerm:
        tok = self.peek()
        if tok is None:
            raise self.error("expected a term")
        if tok.kind == "arg":
            self.take()
            return T.inp(tok.text)
        if tok.text == "(":
            self.take("(")
            inner = self.function_term()
            self.take(")")
            return inner
        if tok.kind != "ident":
            raise self.error(f"expected a term, found {tok.text!r}")
        name = self.take().text
        decls = self.decls
        if self.at("("):
            self.take("(")
            args = []
            if not self.at(")"):
                args.append(self.function_term())
                while self.at(","):
                    self.take(",")
                    args.append(self.function_term())
            self.take(")")
            args = tuple(args)
            if name in decls.cells:
                self._check_cell_params(name, args)
                return FunctionTerm(T.CELL, name, args)
            if name in decls.constants:
                if args:
                    raise self.error(f"constant {name!r} takes no arguments")
                return T.const(name)
            if name in decls.functions or name in decls.predicates or name in decls.methods:
                return FunctionTerm(T.APPLICATION, name, args)
            raise self.error(f"undeclared identifier {name!r}")
        if name in self.params:
            return T.param(name)
        if name in decls.inputs or name in T.BUILTIN_INPUTS:
            return T.inp(name)
        if name in decls.cells:
            self._check_cell_params(name, ())
            return FunctionTerm(T.CELL, name)
        if name in decls.constants:
            return T.const(name)
        if name in decls.methods:
            if decls.methods[name]:
                raise self.error(f"method {name!r} requires parameters {decls.methods[name]}")
            return FunctionTerm(T.APPLICATION, name)
        if name in self.decls.predicates or name in self.decls.outputs:
            return FunctionTerm(T.APPLICATION, name)
        raise self.error(f"undeclared identifier {name!r}")

    def _check_cell_params(self, name: str, args: tuple[FunctionTerm, ...]) -> None:
        declared = self.decls.cells[name]
        got = tuple(a.symbol if a.kind == T.PARAMETER else None for a in args)
        if got != declared:
            raise self.error(f"cell {name!r} declared with parameters {declared}, used with {len(args)} argument(s)")


_SECTIONS = ("#assume", "#require", "#obligation")
_DECL_HEADS = (
    "#params",
    "#methods",
    "#cells",
    "#inputs",
    "#constants",
    "#functions",
    "#predicates",
    "#outputs",
)


def parse_spec(text: str, declarations: Declarations | None = None) -> PastTslSpec:
    """Parse a specification source into a PastTslSpec.

    `declarations` provides an externally loaded identifier environment
    (e.g. derived from a signatures file); inline declaration sections
    extend it.
    """
    decls = declarations.copy() if declarations is not None else Declarations()
    params: tuple[str, ...] = ()
    spec = PastTslSpec((), [], [], [], [], [], [], decls)
    lists = {
        "#assume": (spec.assumptions_init, spec.assumptions_inv),
        "#require": (spec.requirements_init, spec.requirements_inv),
        "#obligation": (spec.obligations_init, spec.obligations_inv),
    }
    section: str | None = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            head, _, rest = line.partition(" ")
            if head in _SECTIONS:
                section = head
                if rest.strip():
                    raise SpecError(f"section header {head} takes no arguments", line_no, 1)
                continue
            if head not in _DECL_HEADS:
                raise SpecError(f"unknown section {head!r}", line_no, 1)
            if section is not None:
                raise SpecError("declarations must precede formula sections", line_no, 1)
            _parse_declaration(head, rest, decls, line_no)
            if head == "#params":
                params = params + tuple(n for n in _split_names(rest, line_no) if n)
            continue
        if section is None:
            raise SpecError("formula outside of a section", line_no, 1)
        init_list, inv_list = lists[section]
        formula, invariant = _parse_formula_line(line, decls, params, line_no)
        (inv_list if invariant else init_list).append(formula)

    spec.parameters = params
    _check_closed(spec)
    return spec


def parse_spec_file(path, declarations: Declarations | None = None) -> PastTslSpec:
    from pathlib import Path

    return parse_spec(Path(path).read_text(encoding="utf-8"), declarations)


def _split_names(rest: str, line_no: int) -> list[str]:
    names = [n.strip() for n in rest.split(",") if n.strip()]
    for n in names:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*(\(.*\))?", n):
            raise SpecError(f"bad declaration {n!r}", line_no, 1)
    return names


def _parse_declaration(head: str, rest: str, decls: Declarations, line_no: int) -> None:
    # Split on commas outside parentheses so `approve(m,n), pause` works.
    items = []
    depth = 0
    cur = ""
    for ch in rest:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            items.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        items.append(cur.strip())

    for item in items:
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)(?:\(([^)]*)\))?", item)
        if not m:
            raise SpecError(f"bad declaration {item!r}", line_no, 1)
        name, arglist = m.group(1), m.group(2)
        args = tuple(a.strip() for a in arglist.split(",") if a.strip()) if arglist else ()
        if head == "#params":
            continue
        if head == "#methods":
            decls.methods[name] = args
        elif head == "#cells":
            decls.cells[name] = args
        elif head == "#inputs":
            decls.inputs.add(name)
        elif head == "#constants":
            decls.constants.add(name)
        elif head == "#functions":
            decls.functions.add(name)
        elif head == "#predicates":
            decls.predicates.add(name)
        elif head == "#outputs":
            decls.outputs.add(name)


def _parse_formula_line(line: str, decls, params, line_no) -> tuple[Formula, bool]:
    toks = _tokenize(line, line_no)
    invariant = False
    if toks and toks[0].text == "G":
        if len(toks) < 2 or toks[1].text != "(":
            raise SpecError("invariant marker G must be followed by (...)", line_no, toks[0].col)
        invariant = True
        if toks[-1].text != ")":
            raise SpecError("unbalanced invariant marker", line_no, toks[-1].col)
        toks = toks[2:-1]
    parser = _FormulaParser(toks, decls, params, line_no)
    return parser.parse(), invariant


def _check_closed(spec: PastTslSpec) -> None:
    declared = set(spec.parameters)
    for name, lst in spec.formula_lists():
        for formula in lst:
            for atom in atoms(formula):
                if isinstance(atom, MethodCall):
                    used = set(atom.params)
                elif isinstance(atom, (Predicate, Update)):
                    used = set(atom.term.parameters())
                else:
                    used = set()
                extra = used - declared
                if extra:
                    raise SpecError(
                        f"parameter(s) {sorted(extra)} used in {name} but not in the #params prefix"
                    )


# ---------------------------------------------------------------------------
# Desugaring


def desugar(spec: PastTslSpec) -> PastTslSpec:
    """Replace method-call sugar, resolve arg@ labels, add mutual exclusion.

    Idempotent: a spec that has already been desugared is returned as is.
    """
    if spec.desugared:
        return spec
    decls = spec.declarations
    call_symbols = decls.call_symbols

    def lower(atom):
        if isinstance(atom, MethodCall):
            args = (T.inp("methodinput"),) + tuple(T.param(p) for p in atom.params)
            return Predicate(PredicateTerm(call_symbols[atom.name], args))
        return atom

    out = PastTslSpec(
        spec.parameters,
        [map_atoms(f, lower) for f in spec.assumptions_init],
        [map_atoms(f, lower) for f in spec.assumptions_inv],
        [map_atoms(f, lower) for f in spec.requirements_init],
        [map_atoms(f, lower) for f in spec.requirements_inv],
        [map_atoms(f, lower) for f in spec.obligations_init],
        [map_atoms(f, lower) for f in spec.obligations_inv],
        decls,
        desugared=True,
    )

    _check_arg_labels(spec)

    # At most one method call per step.
    calls = [
        Predicate(PredicateTerm(call_symbols[name], (T.inp("methodinput"),) + tuple(T.param(p) for p in ps)))
        for name, ps in sorted(decls.methods.items())
    ]
    for i in range(len(calls)):
        for j in range(i + 1, len(calls)):
            out.assumptions_inv.append(Not(And(calls[i], calls[j])))
    return out


def _check_arg_labels(spec: PastTslSpec) -> None:
    """arg@ labels refer to the current method's argument and therefore
    may only appear in formulas that also mention a method call."""
    for _, lst in spec.formula_lists():
        for formula in lst:
            labels = set()
            methods = set()
            for atom in atoms(formula):
                if isinstance(atom, MethodCall):
                    methods.add(atom.name)
                elif isinstance(atom, (Predicate, Update)):
                    term = atom.term
                    stack = list(term.args) if isinstance(term, PredicateTerm) else [term.target, term.source]
                    while stack:
                        t = stack.pop()
                        if t.kind == T.INPUT and t.symbol.startswith("arg@"):
                            labels.add(t.symbol)
                        stack.extend(t.args)
            if labels and not methods:
                raise SpecError(f"arg@ label(s) {sorted(labels)} used outside any method context")


def assemble_global_formula(spec: PastTslSpec) -> Formula:
    """Single formula required to hold at every position of a trace.

    Shape: (first -> A_init && R_init) && H(A_inv && R_inv)
              -> (first -> O_init) && O_inv
    where `first` (weak-yesterday of false) marks position 0.
    """
    if not spec.desugared:
        raise ValueError("assemble_global_formula expects a desugared spec")
    first = WeakYesterday(FALSE)
    antecedent = And(
        Implies(first, And(conj(spec.assumptions_init), conj(spec.requirements_init))),
        Historically(And(conj(spec.assumptions_inv), conj(spec.requirements_inv))),
    )
    consequent = And(Implies(first, conj(spec.obligations_init)), conj(spec.obligations_inv))
    return Implies(antecedent, consequent)


def environment_constraint(spec: PastTslSpec) -> Formula:
    """Current-step assumption/requirement conjunction.

    Used to restrict the depicted transitions of a winning region to inputs
    the environment contract allows at the current position.  When methods
    are declared, every step of a contract trace is a method invocation, so
    the constraint also demands that exactly one call predicate holds (the
    pairwise half already lives in the desugared assumptions).
    """
    if not spec.desugared:
        raise ValueError("environment_constraint expects a desugared spec")
    first = WeakYesterday(FALSE)
    out = And(
        Implies(first, And(conj(spec.assumptions_init), conj(spec.requirements_init))),
        And(conj(spec.assumptions_inv), conj(spec.requirements_inv)),
    )
    decls = spec.declarations
    if decls.methods:
        from .formulas import disj

        calls = [
            Predicate(
                PredicateTerm(
                    decls.call_symbols[name],
                    (T.inp("methodinput"),) + tuple(T.param(p) for p in ps),
                )
            )
            for name, ps in sorted(decls.methods.items())
        ]
        out = And(out, disj(calls))
    return out


def print_spec(spec: PastTslSpec) -> str:
    """Render a spec back to its surface syntax (parse/print round-trips)."""
    decls = spec.declarations
    lines = []
    if spec.parameters:
        lines.append("#params " + ", ".join(spec.parameters))
    if decls.methods:
        lines.append(
            "#methods "
            + ", ".join(n + (f"({', '.join(ps)})" if ps else "") for n, ps in sorted(decls.methods.items()))
        )
    if decls.cells:
        lines.append(
            "#cells "
            + ", ".join(n + (f"({', '.join(ps)})" if ps else "") for n, ps in sorted(decls.cells.items()))
        )
    for head, names in (
        ("#inputs", decls.inputs),
        ("#constants", decls.constants),
        ("#functions", decls.functions),
        ("#predicates", decls.predicates),
        ("#outputs", decls.outputs),
    ):
        if names:
            lines.append(f"{head} " + ", ".join(sorted(names)))
    for head, init_name, inv_name in (
        ("#assume", "assumptions_init", "assumptions_inv"),
        ("#require", "requirements_init", "requirements_inv"),
        ("#obligation", "obligations_init", "obligations_inv"),
    ):
        init_list = getattr(spec, init_name)
        inv_list = getattr(spec, inv_name)
        if init_list or inv_list:
            lines.append(head)
            for f in init_list:
                lines.append(to_source(f))
            for f in inv_list:
                lines.append(f"G({to_source(f)})")
    return "\n".join(lines) + "\n"
