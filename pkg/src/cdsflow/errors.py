"""Exception hierarchy shared by the engine modules."""

from __future__ import annotations


class CdsError(Exception):
    """Base class for every error raised by cdsflow."""


class ValidationError(CdsError, ValueError):
    """An input violates a type invariant (curve, option, config, file)."""


class DomainError(CdsError, ArithmeticError):
    """A computation would leave its mathematical domain (e.g. 0/0)."""


class PricingError(CdsError):
    """Pricing failed for one option; carries the option's batch index."""

    def __init__(self, option_index: int, message: str) -> None:
        super().__init__(f"option {option_index}: {message}")
        self.option_index = option_index
        self.message = message


class StageFailure(CdsError, RuntimeError):
    """A pipeline stage died; the run was torn down."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"pipeline stage {stage!r} failed: {cause!r}")
        self.stage = stage
        self.cause = cause
