"""Exception hierarchy and process exit codes for the toolchain."""

EXIT_OK = 0
EXIT_PARSE_ERROR = 2
EXIT_UNREALIZABLE = 3
EXIT_REQUIREMENT_VIOLATION = 4
EXIT_INDEPENDENCE_FAILURE = 5
EXIT_INTERNAL = 1


class SynthesisError(Exception):
    exit_code = EXIT_INTERNAL


class SpecError(SynthesisError):
    """Problem in the textual specification (syntax or resolution)."""

    exit_code = EXIT_PARSE_ERROR

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{line}:{column or 0}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class SignatureError(SynthesisError):
    exit_code = EXIT_PARSE_ERROR


class Unrealizable(SynthesisError):
    exit_code = EXIT_UNREALIZABLE


class RequirementViolation(SynthesisError):
    exit_code = EXIT_REQUIREMENT_VIOLATION

    def __init__(self, message, counterexamples=()):
        super().__init__(message)
        self.counterexamples = list(counterexamples)


class IndependenceFailure(SynthesisError):
    exit_code = EXIT_INDEPENDENCE_FAILURE

    def __init__(self, message, counterexamples=()):
        super().__init__(message)
        self.counterexamples = list(counterexamples)


class CapExceeded(SynthesisError):
    """A configurable resource cap (variables, explicit states, product size) was hit."""
