"""Exception hierarchy shared by the package and the CLI."""


class TarError(Exception):
    """Base class for all package errors."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class InputDomainError(TarError, ValueError):
    kind = "input_domain"


class ContractError(TarError, ValueError):
    """A documented precondition was violated by the caller."""

    kind = "contract"


class ExpressionError(TarError, ValueError):
    kind = "expression"

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class InstabilityError(TarError, RuntimeError):
    kind = "instability"

    def __init__(self, step):
        super().__init__(f"trajectory diverged at step {step} (|X| > 1e12)")
        self.step = step


class ConvergenceError(TarError, RuntimeError):
    kind = "convergence"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TruncationError(ConvergenceError):
    kind = "truncation"
