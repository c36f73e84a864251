"""Specification parsing, printing, and desugaring."""

import pytest
from conftest import SPECS

from contractsynth.errors import SpecError
from contractsynth.formulas import And, MethodCall, Not, Predicate, atoms
from contractsynth.frontend import (
    assemble_global_formula,
    desugar,
    environment_constraint,
    parse_spec,
    parse_spec_file,
    print_spec,
)


@pytest.mark.parametrize("name", ["toy.spec", "voting.spec", "erc20_extended.spec"])
def test_print_parse_fixed_point(name):
    spec = parse_spec_file(SPECS / name)
    printed = print_spec(spec)
    reparsed = parse_spec(printed)
    assert print_spec(reparsed) == printed
    assert reparsed.parameters == spec.parameters
    for (label_a, lst_a), (label_b, lst_b) in zip(
        spec.formula_lists(), reparsed.formula_lists()
    ):
        assert label_a == label_b
        assert lst_a == lst_b


def test_sections_and_invariants():
    spec = parse_spec(
        "#methods ping\n"
        "#require\n"
        "G(ping)\n"
        "#obligation\n"
        "ping\n"
    )
    assert len(spec.requirements_inv) == 1
    assert len(spec.obligations_init) == 1
    assert spec.obligations_inv == []


def test_desugar_adds_pairwise_exclusion():
    spec = parse_spec("#methods a, b, c\n#require\nG(a)\n")
    lowered = desugar(spec)
    exclusions = [
        f
        for f in lowered.assumptions_inv
        if isinstance(f, Not) and isinstance(f.arg, And)
    ]
    assert len(exclusions) == 3  # one per unordered pair of the 3 methods
    # No MethodCall sugar survives lowering.
    for _, lst in lowered.formula_lists():
        for formula in lst:
            assert not any(isinstance(a, MethodCall) for a in atoms(formula))


def test_desugar_idempotent():
    spec = desugar(parse_spec_file(SPECS / "voting.spec"))
    assert desugar(spec) is spec


def test_assemble_requires_desugared():
    spec = parse_spec_file(SPECS / "voting.spec")
    with pytest.raises(ValueError):
        assemble_global_formula(spec)
    lowered = desugar(spec)
    assemble_global_formula(lowered)
    environment_constraint(lowered)


def test_environment_requires_a_call_when_methods_exist():
    lowered = desugar(parse_spec_file(SPECS / "voting.spec"))
    env = environment_constraint(lowered)
    calls = [a for a in atoms(env) if isinstance(a, Predicate) and a.term.symbol.startswith("is")]
    assert {a.term.symbol for a in calls} >= {"isVote", "isClose", "isReveal"}


def test_parse_errors():
    with pytest.raises(SpecError):
        parse_spec("#require\nG(undeclared_thing)\n")
    with pytest.raises(SpecError):
        parse_spec("#methods m\n#require\nG(m &&)\n")
    with pytest.raises(SpecError):
        parse_spec("G(true)\n")  # formula outside a section
    with pytest.raises(SpecError):
        parse_spec("#methods m(p)\n#require\nG(m(p))\n")  # p missing from #params
    with pytest.raises(SpecError):
        parse_spec("#bogus x\n")


def test_arg_label_needs_method_context():
    with pytest.raises(SpecError) as err:
        desugar(
            parse_spec(
                "#methods m\n#predicates ge\n#require\nG(ge(arg@x, arg@x))\n"
            )
        )
    assert "arg@" in str(err.value)


def test_arg_label_shared_across_methods_is_fine():
    spec = parse_spec(
        "#methods m, n\n#predicates ge\n#require\nG(m || n -> ge(arg@x, arg@x))\n"
    )
    desugar(spec)
