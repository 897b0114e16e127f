"""Exception types shared across the package."""

from __future__ import annotations


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A computation produced NaN or Inf.

    ``gamma`` is set when the failure happened inside a line search,
    ``iteration`` when it happened inside an optimization loop.
    """

    def __init__(self, message: str, *, gamma: float | None = None, iteration: int | None = None):
        super().__init__(message)
        self.gamma = gamma
        self.iteration = iteration


class ParseError(ValueError):
    """A data file could not be parsed; carries the offending location."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.path = path
        self.line = line
