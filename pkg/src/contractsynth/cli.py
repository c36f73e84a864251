"""Command line entry point for the synthesis toolchain.

Subcommands:

  synthesize  run the full pipeline on a specification and write artifacts
  check       parse and validate a specification without synthesizing
  oracle      evaluate the reference trace semantics of a specification

Exit codes: 0 success, 2 parse or signature error, 3 unrealizable,
4 requirement violation, 5 independence failure, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import (
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_REQUIREMENT_VIOLATION,
    IndependenceFailure,
    RequirementViolation,
    SpecError,
    SynthesisError,
)
from .frontend import parse_spec_file, print_spec
from .game import build_game, closure_violations, extract_machine, winning_region
from .ltl import approximate, eval_trace
from .machine import analyze, export_dot, minimize, resolve_free_choices
from .signatures import check_against, load_signatures_file
from .solidity import emit_contract
from .split import (
    build_instance_product,
    check_independence,
    check_product_equivalence,
    check_smart_contract,
    export_split_dot,
    split,
    verify_split,
)

OUT_DIR_ENV = "CONTRACTSYNTH_OUT"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contractsynth",
        description="Synthesize smart contract control flow from temporal specifications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    syn = sub.add_parser("synthesize", help="run the full synthesis pipeline")
    syn.add_argument("spec", help="specification file")
    syn.add_argument("--signatures", help="signature JSON for Solidity emission")
    syn.add_argument(
        "--out",
        default=None,
        help=f"output directory (default: $" + OUT_DIR_ENV + " or ./out)",
    )
    syn.add_argument("--emit-dot", action="store_true", help="write DOT renderings")
    syn.add_argument(
        "--emit-solidity",
        action="store_true",
        help="write contract source and manifest (requires --signatures)",
    )
    syn.add_argument(
        "--determined",
        nargs="*",
        default=[],
        metavar="PROP",
        help="input propositions that, once true, stay true (deadlock analysis)",
    )
    syn.add_argument(
        "--free-choice-policy",
        choices=["first", "last"],
        default="first",
        help="which output cube to keep when several are winning",
    )
    syn.add_argument("--state-cap", type=int, default=100_000)
    syn.add_argument("--var-cap", type=int, default=4096)
    syn.add_argument(
        "--check-product",
        action="store_true",
        help="build a bounded instance product and compare it with the original machine",
    )
    syn.add_argument("--domain-size", type=int, default=2, help="values per parameter in the product")
    syn.add_argument("--oracle-depth", type=int, default=5, help="trace depth for the product comparison")

    chk = sub.add_parser("check", help="parse and validate a specification")
    chk.add_argument("spec")
    chk.add_argument("--signatures", help="also validate signatures against the specification")

    orc = sub.add_parser("oracle", help="evaluate the trace semantics of a specification")
    orc.add_argument("spec")
    orc.add_argument(
        "--trace",
        required=True,
        help="JSON file with a list of steps, each a list of true proposition names ('-' for stdin)",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_synthesize(args)
    except SynthesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for ce in getattr(exc, "counterexamples", []):
            print(f"  {ce}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _cmd_check(args) -> int:
    spec = parse_spec_file(args.spec)
    if args.signatures:
        cfg = load_signatures_file(args.signatures)
        check_against(cfg, spec.declarations)
    approx = approximate(spec)
    print(print_spec(spec), end="")
    print(approx.table.export_text(), end="")
    print("ok")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    spec = parse_spec_file(args.spec)
    approx = approximate(spec)
    if args.trace == "-":
        raw = json.load(sys.stdin)
    else:
        raw = json.loads(Path(args.trace).read_text(encoding="utf-8"))
    if not isinstance(raw, list) or not all(isinstance(step, list) for step in raw):
        raise SpecError("trace must be a JSON list of lists of proposition names")
    known = {p.name for p in approx.table}
    trace = []
    for i, step in enumerate(raw):
        for name in step:
            if name not in known:
                raise SpecError(f"step {i}: unknown proposition {name!r}")
        trace.append(frozenset(step))
    ok = True
    for i in range(len(trace)):
        holds = eval_trace(approx.formula, trace, i)
        print(f"position {i}: {'holds' if holds else 'violated'}")
        ok = ok and holds
    return EXIT_OK if ok else EXIT_REQUIREMENT_VIOLATION


def _cmd_synthesize(args) -> int:
    out_dir = Path(args.out or os.environ.get(OUT_DIR_ENV) or "out")
    spec = parse_spec_file(args.spec)
    cfg = None
    if args.signatures:
        cfg = load_signatures_file(args.signatures)
        check_against(cfg, spec.declarations)
    if args.emit_solidity and cfg is None:
        raise SpecError("--emit-solidity requires --signatures")

    approx = approximate(spec)
    game = build_game(
        approx.formula, approx.table, environment=approx.environment, var_cap=args.var_cap
    )
    region = winning_region(game)
    result = extract_machine(game, region, state_cap=args.state_cap)
    missing = closure_violations(game, result)
    if missing:
        raise RequirementViolation(
            "extracted machine is not input-complete",
            [f"state {s}: no move on {sorted(label)}" for s, label in missing],
        )
    machine = minimize(result.machine)
    for p in args.determined:
        if p not in machine.inputs:
            raise SpecError(f"--determined: unknown input proposition {p!r}")
    allowed = _env_filter(game, args.determined)
    report = analyze(machine, tuple(args.determined), allowed)
    policy = None if args.free_choice_policy == "first" else (lambda opts: opts[-1])
    resolved = resolve_free_choices(machine, policy)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "analysis.txt").write_text(report.to_text(), encoding="utf-8")
    (out_dir / "analysis.json").write_text(report.to_json() + "\n", encoding="utf-8")
    if args.emit_dot:
        (out_dir / "machine.dot").write_text(export_dot(machine), encoding="utf-8")
        (out_dir / "machine_resolved.dot").write_text(
            export_dot(resolved, "resolved"), encoding="utf-8"
        )

    parameters = spec.parameters
    if parameters:
        try:
            system = split(resolved, parameters)
        except RequirementViolation as exc:
            _write_counterexamples(out_dir, "requirement_violations.txt", exc)
            raise
        problems = verify_split(system) + check_independence(system)
        if problems:
            exc = IndependenceFailure("parameter subsets are not independent", problems)
            _write_counterexamples(out_dir, "independence_failures.txt", exc)
            raise exc
        if args.emit_dot:
            for subset, sub_machine in sorted(system.machines.items()):
                suffix = "_".join(subset) or "none"
                (out_dir / f"split_{suffix}.dot").write_text(
                    export_split_dot(sub_machine, f"split_{suffix}"), encoding="utf-8"
                )
        if args.check_product:
            domain = {
                p: tuple(f"{p}{i}" for i in range(args.domain_size)) for p in parameters
            }
            product = build_instance_product(system, parameters, domain)
            problems = check_smart_contract(product)
            if problems:
                exc = IndependenceFailure("instance product is not a smart contract", problems)
                _write_counterexamples(out_dir, "independence_failures.txt", exc)
                raise exc
            witnesses = check_product_equivalence(product, resolved, depth=args.oracle_depth)
            if witnesses:
                lines = [f"{mu}: {w}" for mu, w in sorted(witnesses.items())]
                exc = IndependenceFailure(
                    "instance product deviates from the original machine", lines
                )
                _write_counterexamples(out_dir, "independence_failures.txt", exc)
                raise exc

    if args.emit_solidity:
        contract = emit_contract(resolved, cfg, parameters)
        (out_dir / "contract.sol").write_text(contract.source, encoding="utf-8")
        (out_dir / "manifest.json").write_text(contract.manifest_json(), encoding="utf-8")

    print(f"synthesized {len(machine.reachable_states())} states")
    if report.free_choices:
        print(f"free choices: {len(report.free_choices)} (resolved)")
    if report.deadlocks:
        print(f"potential deadlocks: {len(report.deadlocks)} (see analysis.txt)")
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def _env_filter(game, determined):
    """Valuations of determined propositions ruled out by the assumptions."""
    if not determined:
        return None
    from .bdd import FALSE

    mgr = game.mgr

    def allowed(valuation) -> bool:
        assignment = {game.input_var[p]: p in valuation for p in determined}
        return mgr.restrict(game.env, assignment) != FALSE

    return allowed


def _write_counterexamples(out_dir: Path, name: str, exc) -> None:
    lines = [str(exc)] + [str(c) for c in getattr(exc, "counterexamples", [])]
    (out_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    sys.exit(main())
