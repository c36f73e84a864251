"""Function, predicate, and update terms of the contract specification logic."""

from __future__ import annotations

from dataclasses import dataclass, field

INPUT = "input"
CELL = "cell"
PARAMETER = "parameter"
CONSTANT = "constant"
APPLICATION = "application"

# Inputs every specification may use without declaring them.
BUILTIN_INPUTS = ("sender", "time", "methodinput")

# Infix comparison operators and their predicate symbols.
COMPARISONS = {
    "=": "eq",
    ">=": "ge",
    ">": "gt",
    "<=": "le",
    "<": "lt",
    "in": "in",
}

# Infix arithmetic on function terms.
ARITHMETIC = {"+": "add", "-": "sub"}


@dataclass(frozen=True)
class FunctionTerm:
    kind: str
    symbol: str
    args: tuple[FunctionTerm, ...] = ()

    def __post_init__(self):
        if self.kind != APPLICATION and self.kind != CELL and self.args:
            raise ValueError(f"{self.kind} term {self.symbol!r} cannot take arguments")

    def parameters(self) -> tuple[str, ...]:
        """Parameter names occurring in the term, in first-occurrence order."""
        out: list[str] = []
        _collect_params(self, out)
        return tuple(out)


def _collect_params(term: FunctionTerm, out: list[str]) -> None:
    if term.kind == PARAMETER and term.symbol not in out:
        out.append(term.symbol)
    for arg in term.args:
        _collect_params(arg, out)


@dataclass(frozen=True)
class PredicateTerm:
    symbol: str
    args: tuple[FunctionTerm, ...] = ()

    def parameters(self) -> tuple[str, ...]:
        out: list[str] = []
        for arg in self.args:
            _collect_params(arg, out)
        return tuple(out)


@dataclass(frozen=True)
class UpdateTerm:
    target: FunctionTerm
    source: FunctionTerm

    def __post_init__(self):
        if self.target.kind != CELL:
            raise ValueError("update target must be a cell reference")

    @property
    def is_self_update(self) -> bool:
        return self.target == self.source

    def parameters(self) -> tuple[str, ...]:
        out: list[str] = []
        _collect_params(self.target, out)
        _collect_params(self.source, out)
        return tuple(out)


def inp(name: str) -> FunctionTerm:
    return FunctionTerm(INPUT, name)


def cell(name: str, *params: FunctionTerm) -> FunctionTerm:
    return FunctionTerm(CELL, name, tuple(params))


def param(name: str) -> FunctionTerm:
    return FunctionTerm(PARAMETER, name)


def const(name: str) -> FunctionTerm:
    return FunctionTerm(CONSTANT, name)


def app(symbol: str, *args: FunctionTerm) -> FunctionTerm:
    return FunctionTerm(APPLICATION, symbol, tuple(args))


def term_slug(term) -> str:
    """Deterministic identifier-safe rendering of a term, used for proposition names."""
    if isinstance(term, PredicateTerm):
        parts = [term.symbol] + [term_slug(a) for a in term.args]
        return "_".join(parts)
    if isinstance(term, UpdateTerm):
        return f"{term_slug(term.target)}_to_{term_slug(term.source)}"
    if isinstance(term, FunctionTerm):
        name = term.symbol.replace("@", "_")
        if term.args:
            return "_".join([name] + [term_slug(a) for a in term.args])
        return name
    raise TypeError(term)
