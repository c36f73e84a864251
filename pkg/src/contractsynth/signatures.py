"""Signature declarations driving Solidity emission.

Signatures are a JSON document listing, for every method, function,
predicate, constant, cell and parameter of a specification, the
information needed to render it as Solidity: types, argument lists,
definitions of uninterpreted symbols, fixed parameter bindings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SpecError
from .frontend import Declarations

BUILTIN_FUNCTIONS = {"add", "sub"}
BUILTIN_PREDICATES = {"eq", "ge", "gt", "le", "lt", "in", "isTrue"}


@dataclass
class MethodSignature:
    name: str
    params: tuple[tuple[str, str | None], ...]  # (parameter, fixed binding or None)
    args: tuple[tuple[str, str], ...]  # (name, solidity type)
    payable: bool = False

    def binding(self, param: str) -> str:
        for name, fixed in self.params:
            if name == param:
                return fixed if fixed is not None else f"_{name}"
        raise SpecError(f"method {self.name!r} has no parameter {param!r}")


@dataclass
class FunctionSignature:
    name: str
    args: tuple[str, ...]
    definition: str  # template over {arg} placeholders
    kind: str = "expression"  # expression | statement
    side_effects: bool = False


@dataclass
class ConstantSignature:
    name: str
    type: str
    value: str


@dataclass
class CellSignature:
    name: str
    params: tuple[str, ...]
    type: str
    visibility: str = "private"
    location: str = ""


@dataclass
class SignatureConfig:
    contract: str
    methods: dict[str, MethodSignature] = field(default_factory=dict)
    functions: dict[str, FunctionSignature] = field(default_factory=dict)
    predicates: dict[str, FunctionSignature] = field(default_factory=dict)
    constants: dict[str, ConstantSignature] = field(default_factory=dict)
    cells: dict[str, CellSignature] = field(default_factory=dict)
    parameters: dict[str, str] = field(default_factory=dict)

    def declarations(self) -> Declarations:
        """Identifier environment induced by the signatures."""
        return Declarations(
            methods={m.name: tuple(p for p, _ in m.params) for m in self.methods.values()},
            cells={c.name: tuple(c.params) for c in self.cells.values()},
            constants=set(self.constants),
            functions=set(self.functions),
            predicates=set(self.predicates),
        )


def load_signatures(text: str) -> SignatureConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"signatures are not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecError("signatures must be a JSON object")
    cfg = SignatureConfig(contract=data.get("contract", "Contract"))
    for name, m in data.get("methods", {}).items():
        params = tuple((p[0], p[1]) for p in m.get("params", []))
        args = tuple((a[0], a[1]) for a in m.get("args", []))
        cfg.methods[name] = MethodSignature(name, params, args, bool(m.get("payable", False)))
    for section, target in (("functions", cfg.functions), ("predicates", cfg.predicates)):
        for name, f in data.get(section, {}).items():
            target[name] = FunctionSignature(
                name,
                tuple(f.get("args", [])),
                f["definition"],
                f.get("kind", "expression"),
                bool(f.get("side_effects", False)),
            )
    for name, c in data.get("constants", {}).items():
        cfg.constants[name] = ConstantSignature(name, c["type"], c["value"])
    for name, c in data.get("cells", {}).items():
        cfg.cells[name] = CellSignature(
            name,
            tuple(c.get("params", [])),
            c["type"],
            c.get("visibility", "private"),
            c.get("location", ""),
        )
    for name, t in data.get("parameters", {}).items():
        cfg.parameters[name] = t
    _validate(cfg)
    return cfg


def load_signatures_file(path) -> SignatureConfig:
    return load_signatures(Path(path).read_text(encoding="utf-8"))


def _validate(cfg: SignatureConfig) -> None:
    for m in cfg.methods.values():
        for p, _ in m.params:
            if p not in cfg.parameters:
                raise SpecError(f"method {m.name!r} uses undeclared parameter {p!r}")
    for c in cfg.cells.values():
        for p in c.params:
            if p not in cfg.parameters:
                raise SpecError(f"cell {c.name!r} uses undeclared parameter {p!r}")
    for f in {**cfg.functions, **cfg.predicates}.values():
        if f.kind not in ("expression", "statement"):
            raise SpecError(f"function {f.name!r} has unknown kind {f.kind!r}")


def check_against(cfg: SignatureConfig, decls: Declarations) -> None:
    """Every spec identifier needs a signature or a built-in replacement."""
    for name, params in decls.methods.items():
        sig = cfg.methods.get(name)
        if sig is None:
            raise SpecError(f"missing method signature for {name!r}")
        declared = tuple(p for p, _ in sig.params)
        if declared != params:
            raise SpecError(
                f"method {name!r}: spec parameters {params} vs signature {declared}"
            )
    for name in decls.cells:
        if name not in cfg.cells:
            raise SpecError(f"missing cell signature for {name!r}")
    for name in decls.constants:
        if name not in cfg.constants:
            raise SpecError(f"missing constant signature for {name!r}")
    for name in decls.functions:
        if name not in cfg.functions and name not in BUILTIN_FUNCTIONS:
            raise SpecError(f"missing function signature for {name!r}")
    for name in decls.predicates:
        if name not in cfg.predicates and name not in BUILTIN_PREDICATES:
            raise SpecError(f"missing predicate signature for {name!r}")
