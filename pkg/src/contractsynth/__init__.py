"""Synthesis of smart-contract control-flow state machines from past-time temporal specs."""

from .errors import (
    EXIT_INDEPENDENCE_FAILURE,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_PARSE_ERROR,
    EXIT_REQUIREMENT_VIOLATION,
    EXIT_UNREALIZABLE,
    CapExceeded,
    IndependenceFailure,
    RequirementViolation,
    SpecError,
    SynthesisError,
    Unrealizable,
)
from .frontend import PastTslSpec, parse_spec, parse_spec_file
from .ltl import Approximation, approximate, eval_trace
from .game import build_game, extract_machine, winning_region
from .machine import (
    AnalysisReport,
    MealyMachine,
    analyze,
    detect_deadlocks,
    detect_free_choices,
    export_dot,
    minimize,
    resolve_free_choices,
)
from .split import (
    SplitSystem,
    build_instance_product,
    check_independence,
    check_product_equivalence,
    check_smart_contract,
    export_split_dot,
    split,
    verify_split,
)
from .signatures import SignatureConfig, check_against, load_signatures, load_signatures_file
from .solidity import EmittedContract, emit_contract

__all__ = [name for name in dir() if not name.startswith("_")]
