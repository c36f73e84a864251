"""Formula ASTs.

The same operator nodes serve both levels of the pipeline: at the frontend
level the atoms are predicate/update/method-call terms, after the
approximation they are plain propositions.  Only past-time temporal
operators exist.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import ARITHMETIC, COMPARISONS, FunctionTerm, PredicateTerm, UpdateTerm


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Equiv(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Yesterday(Formula):
    arg: Formula


@dataclass(frozen=True)
class WeakYesterday(Formula):
    arg: Formula


@dataclass(frozen=True)
class Since(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Once(Formula):
    arg: Formula


@dataclass(frozen=True)
class Historically(Formula):
    arg: Formula


@dataclass(frozen=True)
class Predicate(Formula):
    term: PredicateTerm


@dataclass(frozen=True)
class Update(Formula):
    term: UpdateTerm


@dataclass(frozen=True)
class MethodCall(Formula):
    name: str
    params: tuple[str, ...] = ()


@dataclass(frozen=True)
class Prop(Formula):
    """Atomic proposition of the approximated (pastLTL) formula."""

    name: str


TRUE = TrueF()
FALSE = FalseF()

TEMPORAL = (Yesterday, WeakYesterday, Since, Once, Historically)
ATOMS = (TrueF, FalseF, Predicate, Update, MethodCall, Prop)


def conj(formulas) -> Formula:
    """Left-assoc conjunction; empty input is `true`."""
    formulas = list(formulas)
    if not formulas:
        return TRUE
    out = formulas[0]
    for f in formulas[1:]:
        out = And(out, f)
    return out


def disj(formulas) -> Formula:
    formulas = list(formulas)
    if not formulas:
        return FALSE
    out = formulas[0]
    for f in formulas[1:]:
        out = Or(out, f)
    return out


def subformulas(formula: Formula):
    """All subformulas, post-order, duplicates included."""
    for child in children(formula):
        yield from subformulas(child)
    yield formula


def children(formula: Formula) -> tuple[Formula, ...]:
    if isinstance(formula, (Not, Yesterday, WeakYesterday, Once, Historically)):
        return (formula.arg,)
    if isinstance(formula, (And, Or, Implies, Equiv, Since)):
        return (formula.left, formula.right)
    return ()


def atoms(formula: Formula):
    """Atomic leaves (predicates, updates, calls, propositions), post-order."""
    for sub in subformulas(formula):
        if isinstance(sub, (Predicate, Update, MethodCall, Prop)):
            yield sub


def map_atoms(formula: Formula, fn) -> Formula:
    """Rebuild the formula, replacing each atomic leaf by fn(leaf)."""
    if isinstance(formula, (TrueF, FalseF)):
        return formula
    if isinstance(formula, (Predicate, Update, MethodCall, Prop)):
        return fn(formula)
    kids = children(formula)
    if len(kids) == 1:
        return type(formula)(map_atoms(kids[0], fn))
    return type(formula)(map_atoms(kids[0], fn), map_atoms(kids[1], fn))


# Precedence levels for printing/parsing round-trips (higher binds tighter).
_PREC = {
    Equiv: 1,
    Implies: 2,
    Or: 3,
    And: 4,
    Since: 5,
    Not: 6,
    Yesterday: 6,
    WeakYesterday: 6,
    Once: 6,
    Historically: 6,
}

_COMPARISON_BY_SYMBOL = {v: k for k, v in COMPARISONS.items()}
_ARITH_BY_SYMBOL = {v: k for k, v in ARITHMETIC.items()}


def term_source(term) -> str:
    """Surface-syntax rendering of a term."""
    if isinstance(term, PredicateTerm):
        op = _COMPARISON_BY_SYMBOL.get(term.symbol)
        if op and len(term.args) == 2:
            return f"{term_source(term.args[0])} {op} {term_source(term.args[1])}"
        if not term.args:
            return term.symbol
        inner = ", ".join(term_source(a) for a in term.args)
        return f"{term.symbol}({inner})"
    if isinstance(term, UpdateTerm):
        return f"[[{term_source(term.target)} <- {term_source(term.source)}]]"
    if isinstance(term, FunctionTerm):
        if term.kind == "application":
            op = _ARITH_BY_SYMBOL.get(term.symbol)
            if op and len(term.args) == 2:
                return f"({term_source(term.args[0])} {op} {term_source(term.args[1])})"
            inner = ", ".join(term_source(a) for a in term.args)
            return f"{term.symbol}({inner})"
        if term.kind == "constant":
            return f"{term.symbol}()"
        if term.kind == "cell" and term.args:
            inner = ", ".join(term_source(a) for a in term.args)
            return f"{term.symbol}({inner})"
        return term.symbol
    raise TypeError(term)


def to_source(formula: Formula, parent_prec: int = 0) -> str:
    """Surface-syntax rendering of a formula; parses back to the same AST."""
    if isinstance(formula, TrueF):
        return "true"
    if isinstance(formula, FalseF):
        return "false"
    if isinstance(formula, Prop):
        return formula.name
    if isinstance(formula, Predicate):
        text = term_source(formula.term)
        # Infix comparisons need parens inside larger formulas.
        if " " in text and parent_prec > 0:
            return f"({text})"
        return text
    if isinstance(formula, Update):
        return term_source(formula.term)
    if isinstance(formula, MethodCall):
        if formula.params:
            return f"{formula.name}({', '.join(formula.params)})"
        return formula.name

    prec = _PREC[type(formula)]
    if isinstance(formula, Not):
        text = "!" + to_source(formula.arg, prec + 1)
    elif isinstance(formula, Yesterday):
        text = "Y " + to_source(formula.arg, prec + 1)
    elif isinstance(formula, WeakYesterday):
        text = "WY " + to_source(formula.arg, prec + 1)
    elif isinstance(formula, Once):
        text = "O " + to_source(formula.arg, prec + 1)
    elif isinstance(formula, Historically):
        text = "H " + to_source(formula.arg, prec + 1)
    elif isinstance(formula, And):
        text = f"{to_source(formula.left, prec)} && {to_source(formula.right, prec + 1)}"
    elif isinstance(formula, Or):
        text = f"{to_source(formula.left, prec)} || {to_source(formula.right, prec + 1)}"
    elif isinstance(formula, Since):
        text = f"{to_source(formula.left, prec + 1)} S {to_source(formula.right, prec)}"
    elif isinstance(formula, Implies):
        text = f"{to_source(formula.left, prec + 1)} -> {to_source(formula.right, prec)}"
    elif isinstance(formula, Equiv):
        text = f"{to_source(formula.left, prec + 1)} <-> {to_source(formula.right, prec)}"
    else:
        raise TypeError(formula)
    if prec < parent_prec:
        return f"({text})"
    return text
