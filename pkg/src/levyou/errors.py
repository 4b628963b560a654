"""Exception hierarchy shared by every module."""

from __future__ import annotations


class LevyOUError(Exception):
    """Base class for all library errors."""


class InvalidInputError(LevyOUError, ValueError):
    pass


class RankDeficientError(LevyOUError, ValueError):
    pass


class InvalidShiftError(InvalidInputError):
    pass


class InvalidDensityError(InvalidInputError):
    pass


class UnsupportedDimensionError(LevyOUError, ValueError):
    pass


class DivisionDomainError(LevyOUError, ArithmeticError):
    pass


class ConsistencyError(LevyOUError, RuntimeError):
    """An identity that must hold by construction was violated."""


class NonFiniteSampleError(LevyOUError, RuntimeError):
    pass


class PreconditionError(LevyOUError):
    """A model hypothesis does not hold for the supplied inputs.

    ``hypothesis`` names the failed condition so that callers (and the CLI)
    can report it verbatim.
    """

    def __init__(self, hypothesis: str, detail: str = "") -> None:
        self.hypothesis = hypothesis
        self.detail = detail
        msg = hypothesis if not detail else f"{hypothesis}: {detail}"
        super().__init__(msg)


class InapplicableHypothesisError(PreconditionError):
    pass
